use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{ExperimentConfig, ExperimentError, Kind, PipelineError, CHAIN_TOLERANCE};
use crate::barcode2d::{barcode_entropy, BarcodeError};
use crate::curves::{ClosedCurve, TubularRegion};
use crate::dynamics::{SurfaceMap, TorusPoint};
use crate::entropy::{
    log_plus, separated_chord_entropy, volume_growth_entropy_limit, EntropyError, EntropyEstimate,
    GrowthSeries,
};
use crate::measures::{
    chord_measure_schedule, common_period_collection, eta_periodic_orbits, mean_orbit_measure,
    periodic_measure, tv_distance, GridMeasure, PeriodicOrbit,
};

pub const DEFAULT_OUT_DIR: &str = "entropylab-out";
const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Serialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub stages: Vec<StageTime>,
    pub warnings: Vec<String>,
    pub summary: Value,
    pub error: Option<String>,
    /// Every other file in the output directory.
    pub files: Vec<FileRecord>,
}

impl RunManifest {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

struct Series {
    method: &'static str,
    param: f64,
    series: GrowthSeries,
}

struct Run<'c> {
    cfg: &'c ExperimentConfig,
    dir: PathBuf,
    stages: Vec<StageTime>,
    warnings: Vec<String>,
    series: Vec<Series>,
    estimates: Vec<Value>,
    summary: serde_json::Map<String, Value>,
}

impl Run<'_> {
    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let t = Instant::now();
        let out = f(self);
        self.stages.push(StageTime {
            stage: stage.into(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    fn write(
        &self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), PipelineError> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn write_json(&self, name: &str, v: &impl Serialize) -> Result<(), PipelineError> {
        let text = serde_json::to_string_pretty(v)?;
        self.write(name, |w| writeln!(w, "{text}"))
    }

    fn curves(&self) -> Result<(ClosedCurve, ClosedCurve), PipelineError> {
        let build =
            |s: &Option<super::CurveSpec>, label| s.as_ref().expect("validated").build(label);
        Ok((build(&self.cfg.l0, "L0")?, build(&self.cfg.l, "L")?))
    }

    fn push_estimate(&mut self, name: &str, e: &EntropyEstimate) {
        self.estimates
            .push(json!({ "estimator": name, "estimate": e }));
    }

    /// Keeps the partial series of a budget overrun before failing.
    fn keep_partial(&mut self, method: &'static str, param: f64, e: &EntropyError) {
        if let EntropyError::BudgetExceeded {
            limit,
            completed,
            partial,
        } = e
        {
            self.warnings.push(format!(
                "{method}: vertex budget {limit} hit after {completed} steps"
            ));
            self.series.push(Series {
                method,
                param,
                series: partial.clone(),
            });
        }
    }

    fn volume(&mut self) -> Result<f64, PipelineError> {
        let (l0, l) = self.curves()?;
        let s = &self.cfg.schedule;
        let res = volume_growth_entropy_limit(
            &self.cfg.map,
            &l0,
            &l,
            &s.eta,
            s.k_max,
            &s.evolve_options(),
        );
        let lim = match res {
            Ok(v) => v,
            Err(e) => {
                self.keep_partial("volume-growth", s.eta[0], &e);
                return Err(e.into());
            }
        };
        for st in &lim.stages {
            self.series.push(Series {
                method: "volume-growth",
                param: st.eta,
                series: st.series.clone(),
            });
            self.push_estimate("volume-growth", &st.estimate);
        }
        self.summary.insert("h_vol".into(), json!(lim.limit));
        Ok(lim.limit)
    }

    fn barcode(&mut self) -> Result<f64, PipelineError> {
        let (l0, l) = self.curves()?;
        let s = &self.cfg.schedule;
        let res = barcode_entropy(
            &self.cfg.map,
            &l0,
            &l,
            &s.eps,
            s.k_max,
            &s.evolve_options(),
            self.cfg.seed,
        );
        let rep = match res {
            Ok(r) => r,
            Err(BarcodeError::Entropy(e)) => {
                self.keep_partial("barcode", *s.eps.last().unwrap(), &e);
                return Err(BarcodeError::Entropy(e).into());
            }
            Err(e) => return Err(e.into()),
        };
        for bc in &rep.barcodes {
            self.write(&format!("bars_k{}.csv", bc.k), |w| bc.write_csv(w))?;
        }
        for sm in &rep.summaries {
            if sm.perturbations > 0 {
                self.warnings.push(format!(
                    "barcode k={}: {} degeneracy perturbations",
                    sm.k, sm.perturbations
                ));
            }
            if 2 * sm.finite + sm.infinite != sm.intersections {
                self.warnings.push(format!(
                    "barcode k={}: bar count does not match intersections",
                    sm.k
                ));
            }
        }
        for ((series, est), &eps) in rep.series.iter().zip(&rep.estimates).zip(&rep.eps) {
            self.series.push(Series {
                method: "barcode",
                param: eps,
                series: series.clone(),
            });
            match est {
                Some(e) => self.push_estimate("barcode", e),
                None => self
                    .warnings
                    .push(format!("barcode eps={eps}: too few bars to fit")),
            }
        }
        self.summary.insert("h_barcode".into(), json!(rep.estimate));
        self.write_json("barcode_summary.json", &rep.summaries)?;
        Ok(rep.estimate)
    }

    fn metric_lb(&mut self) -> Result<f64, PipelineError> {
        let (l0, l) = self.curves()?;
        let s = &self.cfg.schedule;
        let u = TubularRegion::new(l, s.region)?;
        let ks: Vec<usize> = (1..=s.k_max).collect();
        let rep =
            separated_chord_entropy(&self.cfg.map, &l0, &u, s.separation, &ks, s.samples, false)?;
        self.series.push(Series {
            method: "separated-chords",
            param: s.separation,
            series: rep.series.clone(),
        });
        self.push_estimate("separated-chords", &rep.estimate);
        self.summary
            .insert("h_metric_lb".into(), json!(rep.estimate.slope));
        Ok(rep.estimate.slope)
    }

    fn write_measure(&self, name: &str, m: &GridMeasure) -> Result<(), PipelineError> {
        self.write(name, |w| m.write_csv(w))
    }

    fn chord_measures(&mut self) -> Result<(), PipelineError> {
        let (l0, l) = self.curves()?;
        let s = &self.cfg.schedule;
        let stages = chord_measure_schedule(
            &self.cfg.map,
            &l0,
            &l,
            &s.eta,
            s.k_max,
            s.samples,
            s.resolution,
        )?;
        let rows: Vec<Value> = stages
            .iter()
            .map(|st| json!({ "eta": st.eta, "chords": st.chords, "tv_to_previous": st.tv_to_previous }))
            .collect();
        match stages
            .iter()
            .rev()
            .find_map(|st| st.measure.as_ref().map(|m| (st.eta, m)))
        {
            Some((eta, m)) => {
                self.write_measure(&format!("measure_R{}.csv", s.resolution), m)?;
                self.summary.insert("measure_eta".into(), json!(eta));
            }
            None => self
                .warnings
                .push("no approximate chords at any stage".into()),
        }
        self.summary.insert("chord_stages".into(), json!(rows));
        Ok(())
    }

    fn periodic(&mut self) -> Result<(), PipelineError> {
        let s = &self.cfg.schedule;
        let map = &self.cfg.map;
        let r = s.resolution;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let seeds: Vec<TorusPoint> = (0..s.samples)
            .map(|_| TorusPoint::new(rng.random(), rng.random()))
            .collect();
        let near = eta_periodic_orbits(map, s.eta[0], s.k_max, &seeds)?;
        self.summary
            .insert("eta_periodic_orbits".into(), json!(near.len()));
        if !near.is_empty() {
            let m = mean_orbit_measure(&near, r)?;
            self.summary.insert(
                "eta_periodic_tv_uniform".into(),
                json!(tv_distance(&m, &GridMeasure::uniform(r)?)?),
            );
            self.write_measure(&format!("eta_periodic_R{r}.csv"), &m)?;
        }
        let SurfaceMap::LinearHyperbolic(a) = map else {
            self.warnings
                .push("exact periodic orbits need a linear map; skipped".into());
            return Ok(());
        };
        let q = s.denominator as i64;
        let mut seen = vec![false; (q * q) as usize];
        let mut orbits = Vec::new();
        for start in 0..(q * q) {
            if seen[start as usize] {
                continue;
            }
            let mut v = [start / q, start % q];
            let mut period = 0;
            loop {
                seen[(v[0] * q + v[1]) as usize] = true;
                let w = a.apply_int(v);
                v = [w[0].rem_euclid(q), w[1].rem_euclid(q)];
                period += 1;
                if v[0] * q + v[1] == start {
                    break;
                }
            }
            let x = TorusPoint::new((start / q) as f64 / q as f64, (start % q) as f64 / q as f64);
            orbits.push(PeriodicOrbit::new(map, x, period)?);
        }
        let mu = periodic_measure(&orbits, r)?;
        let common = common_period_collection(map, &orbits)?;
        let nu = periodic_measure(&common, r)?;
        self.write_measure(&format!("measure_R{r}.csv"), &mu)?;
        self.summary
            .insert("periodic_orbits".into(), json!(orbits.len()));
        self.summary.insert(
            "common_period".into(),
            json!(common.first().map(|o| o.period)),
        );
        self.summary
            .insert("common_period_tv".into(), json!(tv_distance(&mu, &nu)?));
        Ok(())
    }

    fn chain(&mut self) -> Result<(), PipelineError> {
        let h_vol = self.timed("volume-growth", |r| r.volume())?;
        let h_barcode = self.timed("barcode-entropy", |r| r.barcode())?;
        let h_metric = self.timed("metric-entropy-lb", |r| r.metric_lb())?;
        let map = &self.cfg.map;
        let h_top = map
            .reference_topological_entropy()
            .or(map.is_identity().then_some(0.0));
        let mut checks = vec![
            check("h_barcode", h_barcode, "h_vol", h_vol),
            check("h_vol", h_vol, "h_metric_lb", h_metric),
        ];
        if let Some(h) = h_top {
            checks.push(check("h_metric_lb", h_metric, "h_top_ref", h));
        }
        let pass = checks.iter().all(|c| c["pass"] == json!(true));
        let table = json!({
            "columns": ["h_barcode", "h_vol", "h_metric_lb", "h_top_ref"],
            "values": [h_barcode, h_vol, h_metric, h_top],
            "tolerance": CHAIN_TOLERANCE,
            "checks": checks,
            "pass": pass,
        });
        self.write_json("chain_check.json", &table)?;
        self.summary.insert("chain_pass".into(), json!(pass));
        Ok(())
    }

    fn pipeline(&mut self) -> Result<(), PipelineError> {
        match self.cfg.kind {
            Kind::VolumeGrowth => self.timed("volume-growth", |r| r.volume()).map(drop),
            Kind::BarcodeEntropy => self.timed("barcode-entropy", |r| r.barcode()).map(drop),
            Kind::MetricEntropyLb => self.timed("metric-entropy-lb", |r| r.metric_lb()).map(drop),
            Kind::ChordMeasure => self.timed("chord-measure", |r| r.chord_measures()),
            Kind::PeriodicMeasures => self.timed("periodic-measures", |r| r.periodic()),
            Kind::ChainCheck => self.chain(),
        }
    }

    fn write_series(&self) -> Result<(), PipelineError> {
        if self.series.is_empty() {
            return Ok(());
        }
        self.write("growth_series.csv", |w| {
            writeln!(w, "method,param,k,value,log_plus")?;
            for s in &self.series {
                for &(k, v) in s.series.points() {
                    writeln!(w, "{},{},{k},{v},{}", s.method, s.param, log_plus(v))?;
                }
            }
            Ok(())
        })?;
        if !self.estimates.is_empty() {
            self.write_json("entropy_estimate.json", &self.estimates)?;
        }
        Ok(())
    }
}

fn check(lhs: &str, a: f64, rhs: &str, b: f64) -> Value {
    json!({
        "inequality": format!("{lhs} <= {rhs} + {CHAIN_TOLERANCE}"),
        "lhs": a,
        "rhs": b,
        "pass": a <= b + CHAIN_TOLERANCE,
    })
}

fn sha256_file(path: &Path) -> std::io::Result<(String, u64)> {
    let mut h = Sha256::new();
    let mut f = File::open(path)?;
    let bytes = std::io::copy(&mut f, &mut h)?;
    Ok((hex::encode(h.finalize()), bytes))
}

/// Hashes of every file under `dir` except the manifest, sorted by path.
pub fn hash_outputs(dir: &Path) -> std::io::Result<Vec<FileRecord>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == MANIFEST || !entry.file_type()?.is_file() {
            continue;
        }
        let (sha256, bytes) = sha256_file(&entry.path())?;
        out.push(FileRecord {
            path: name,
            sha256,
            bytes,
        });
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

/// Runs the configured pipeline. Pipeline failures are recorded in the
/// manifest (check [`RunManifest::succeeded`]); only invalid configs and
/// an unusable output directory are returned as errors.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest, ExperimentError> {
    cfg.validate()?;
    let dir = cfg
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    fs::create_dir_all(&dir).map_err(PipelineError::from)?;
    let mut run = Run {
        cfg,
        dir,
        stages: Vec::new(),
        warnings: Vec::new(),
        series: Vec::new(),
        estimates: Vec::new(),
        summary: serde_json::Map::new(),
    };
    let mut error = run.pipeline().err().map(|e| e.to_string());
    if let Err(e) = run.write_series() {
        error.get_or_insert(e.to_string());
    }
    let files = hash_outputs(&run.dir).map_err(PipelineError::from)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        stages: run.stages,
        warnings: run.warnings,
        summary: Value::Object(run.summary),
        error,
        files,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(PipelineError::from)?;
    fs::write(run.dir.join(MANIFEST), text + "\n").map_err(PipelineError::from)?;
    Ok(manifest)
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::Ini;
use serde::Serialize;

use super::{ConfigError, Kind};
use crate::curves::{
    read_curve_csv, ClosedCurve, CurveError, EvolveOptions, DEFAULT_VERTEX_BUDGET,
};
use crate::dynamics::{
    FourierTerm, HyperbolicMatrix, Shear, ShearAxis, SurfaceMap, TORUS_DIAMETER,
};
use crate::measures::DEFAULT_RESOLUTION;

const SECTIONS: [&str; 4] = ["map", "curves", "schedule", "output"];

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum CurveSpec {
    Circle {
        center: [f64; 2],
        radius: f64,
        vertices: usize,
    },
    Stadium {
        center: [f64; 2],
        angle: f64,
        half_length: f64,
        radius: f64,
        spacing: f64,
    },
    Flat {
        class: [i64; 2],
        offset: f64,
        vertices: usize,
    },
    File {
        path: PathBuf,
    },
}

const STADIUM_CAP_VERTICES: usize = 24;

impl CurveSpec {
    pub fn build(&self, label: &str) -> Result<ClosedCurve, CurveError> {
        let c = match self {
            CurveSpec::Circle {
                center,
                radius,
                vertices,
            } => ClosedCurve::round_circle(*center, *radius, *vertices)?,
            CurveSpec::Stadium {
                center,
                angle,
                half_length,
                radius,
                spacing,
            } => ClosedCurve::stadium(
                *center,
                *angle,
                *half_length,
                *radius,
                *spacing,
                STADIUM_CAP_VERTICES,
            )?,
            CurveSpec::Flat {
                class,
                offset,
                vertices,
            } => ClosedCurve::flat_circle(*class, *offset, *vertices)?,
            CurveSpec::File { path } => {
                let f = std::fs::File::open(path)?;
                read_curve_csv(std::io::BufReader::new(f), label)?
            }
        };
        Ok(c.with_label(label))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    pub eta: Vec<f64>,
    pub eps: Vec<f64>,
    pub k_max: usize,
    pub samples: usize,
    pub max_sag: f64,
    pub resolution: usize,
    pub separation: f64,
    pub region: f64,
    pub denominator: u64,
    pub vertex_budget: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            eta: vec![0.1, 0.05, 0.025],
            eps: crate::barcode2d::default_eps_schedule(0.01, 6),
            k_max: 12,
            samples: 1 << 20,
            max_sag: EvolveOptions::default().max_sag,
            resolution: DEFAULT_RESOLUTION,
            separation: 0.05,
            region: 0.1,
            denominator: 7,
            vertex_budget: DEFAULT_VERTEX_BUDGET,
        }
    }
}

impl Schedule {
    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions {
            max_sag: self.max_sag,
            vertex_budget: self.vertex_budget,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub map: SurfaceMap,
    pub l0: Option<CurveSpec>,
    pub l: Option<CurveSpec>,
    pub schedule: Schedule,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(kind: Kind, map: SurfaceMap) -> Self {
        ExperimentConfig {
            kind,
            seed: 0,
            map,
            l0: None,
            l: None,
            schedule: Schedule::default(),
            out_dir: None,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses INI text; relative file paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let name = name.unwrap_or("").to_string();
            if !name.is_empty() && !SECTIONS.contains(&name.as_str()) {
                return Err(ConfigError::at(name, "unknown section"));
            }
            let s = sections
                .entry(name.clone())
                .or_insert_with(|| Section::new(&name));
            for (k, v) in props.iter() {
                s.values.insert(k.to_string(), v.trim().to_string());
            }
        }
        let mut take = |name: &str| sections.remove(name).unwrap_or_else(|| Section::new(name));
        let mut top = take("");
        let mut map_s = take("map");
        let mut curves = take("curves");
        let mut sched = take("schedule");
        let mut output = take("output");

        let kind: Kind = top
            .take("kind")
            .ok_or_else(|| ConfigError::at("kind", "missing"))?
            .parse()?;
        let seed = top.parse_or("seed", 0u64)?;
        let map = parse_map(&mut map_s)?;

        let d = Schedule::default();
        let schedule = Schedule {
            eta: sched.list_or("eta", d.eta)?,
            eps: sched.list_or("eps", d.eps)?,
            k_max: sched.parse_or("k_max", d.k_max)?,
            samples: sched.parse_or("samples", d.samples)?,
            max_sag: sched.parse_or("max_sag", d.max_sag)?,
            resolution: sched.parse_or("resolution", d.resolution)?,
            separation: sched.parse_or("separation", d.separation)?,
            region: match sched.get("region") {
                Some("whole") => {
                    sched.take("region");
                    1.0
                }
                _ => sched.parse_or("region", d.region)?,
            },
            denominator: sched.parse_or("denominator", d.denominator)?,
            vertex_budget: sched.parse_or("vertex_budget", d.vertex_budget)?,
        };
        let l0 = curves
            .take("l0")
            .map(|v| parse_curve("curves.l0", &v, &map, base))
            .transpose()?;
        let l = curves
            .take("l")
            .map(|v| parse_curve("curves.l", &v, &map, base))
            .transpose()?;
        let out_dir = output.take("dir").map(|d| base.join(d));
        for s in [&top, &map_s, &curves, &sched, &output] {
            s.finish()?;
        }
        let cfg = ExperimentConfig {
            kind,
            seed,
            map,
            l0,
            l,
            schedule,
            out_dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.schedule;
        if s.eta.is_empty() {
            return Err(ConfigError::at("schedule.eta", "empty"));
        }
        for (i, &e) in s.eta.iter().enumerate() {
            if !(e > 0.0 && e < 0.25) {
                return Err(ConfigError::at(
                    format!("schedule.eta[{i}]"),
                    format!("eta must satisfy 0 < eta < 0.25, got {e}"),
                ));
            }
            if i > 0 && e >= s.eta[i - 1] {
                return Err(ConfigError::at(
                    format!("schedule.eta[{i}]"),
                    "eta schedule must be strictly decreasing",
                ));
            }
        }
        if s.eps.is_empty() {
            return Err(ConfigError::at("schedule.eps", "empty"));
        }
        for (i, &e) in s.eps.iter().enumerate() {
            if !(e > 0.0 && e.is_finite()) {
                return Err(ConfigError::at(
                    format!("schedule.eps[{i}]"),
                    format!("must be positive, got {e}"),
                ));
            }
        }
        if s.k_max < 4 {
            return Err(ConfigError::at(
                "schedule.k_max",
                format!("k_max must be >= 4, got {}", s.k_max),
            ));
        }
        let positive = [
            ("samples", s.samples as f64),
            ("max_sag", s.max_sag),
            ("vertex_budget", s.vertex_budget as f64),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::at(
                    format!("schedule.{key}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if s.resolution == 0 || !s.resolution.is_power_of_two() {
            return Err(ConfigError::at(
                "schedule.resolution",
                format!("must be a power of two, got {}", s.resolution),
            ));
        }
        if !(s.separation > 0.0 && s.separation < 0.25) {
            return Err(ConfigError::at(
                "schedule.separation",
                format!("eta must satisfy 0 < eta < 0.25, got {}", s.separation),
            ));
        }
        if !(s.region > 0.0 && (s.region < 0.25 || s.region >= TORUS_DIAMETER)) {
            return Err(ConfigError::at(
                "schedule.region",
                format!("must lie in (0, 0.25) or be `whole`, got {}", s.region),
            ));
        }
        if s.denominator < 2 {
            return Err(ConfigError::at(
                "schedule.denominator",
                "must be at least 2",
            ));
        }
        if self.kind.needs_curves() {
            for (key, c) in [("curves.l0", &self.l0), ("curves.l", &self.l)] {
                if c.is_none() {
                    return Err(ConfigError::at(key, format!("required by {}", self.kind)));
                }
            }
        }
        Ok(())
    }
}

struct Section {
    name: String,
    values: BTreeMap<String, String>,
}

impl Section {
    fn new(name: &str) -> Self {
        Section {
            name: name.to_string(),
            values: BTreeMap::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.name)
        }
    }

    fn get(&mut self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn parse_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| ConfigError::at(self.path(key), format!("{v:?}: {e}"))),
        }
    }

    fn list_or(&mut self, key: &str, default: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => numbers(&v).map_err(|m| ConfigError::at(self.path(key), m)),
        }
    }

    /// Errors on keys nobody consumed.
    fn finish(&self) -> Result<(), ConfigError> {
        match self.values.keys().next() {
            Some(k) => Err(ConfigError::at(self.path(k), "unknown key")),
            None => Ok(()),
        }
    }
}

fn numbers(v: &str) -> Result<Vec<f64>, String> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("bad number {t:?}")))
        .collect()
}

fn parse_map(s: &mut Section) -> Result<SurfaceMap, ConfigError> {
    let ty = s.take("type").unwrap_or_else(|| "cat".into());
    let map = match ty.as_str() {
        "cat" => SurfaceMap::cat(),
        "identity" => SurfaceMap::identity(),
        "linear" => {
            let raw = s
                .take("matrix")
                .ok_or_else(|| ConfigError::at("map.matrix", "required for linear maps"))?;
            let v = numbers(&raw).map_err(|m| ConfigError::at("map.matrix", m))?;
            if v.len() != 4 || v.iter().any(|x| x.fract() != 0.0) {
                return Err(ConfigError::at(
                    "map.matrix",
                    "expected four integers a b c d",
                ));
            }
            let m = [[v[0] as i64, v[1] as i64], [v[2] as i64, v[3] as i64]];
            SurfaceMap::LinearHyperbolic(
                HyperbolicMatrix::new(m)
                    .map_err(|e| ConfigError::at("map.matrix", e.to_string()))?,
            )
        }
        "shears" => {
            let raw = s
                .take("shears")
                .ok_or_else(|| ConfigError::at("map.shears", "required for shear maps"))?;
            let shears = raw
                .split(';')
                .enumerate()
                .map(|(i, part)| {
                    parse_shear(part).map_err(|m| ConfigError::at(format!("map.shears[{i}]"), m))
                })
                .collect::<Result<Vec<_>, _>>()?;
            SurfaceMap::ShearComposition(shears)
        }
        other => {
            return Err(ConfigError::at(
                "map.type",
                format!("unknown map type {other:?}"),
            ))
        }
    };
    Ok(map)
}

/// `x f1 a1 f2 a2 ...`
fn parse_shear(part: &str) -> Result<Shear, String> {
    let mut tokens = part.split_whitespace();
    let axis = match tokens.next() {
        Some("x") => ShearAxis::X,
        Some("y") => ShearAxis::Y,
        other => return Err(format!("axis must be x or y, got {other:?}")),
    };
    let rest: Vec<&str> = tokens.collect();
    if !rest.len().is_multiple_of(2) {
        return Err("expected frequency/amplitude pairs".into());
    }
    let terms = rest
        .chunks(2)
        .map(|p| {
            let frequency = p[0]
                .parse::<u32>()
                .map_err(|_| format!("bad frequency {:?}", p[0]))?;
            let amplitude = p[1]
                .parse::<f64>()
                .map_err(|_| format!("bad amplitude {:?}", p[1]))?;
            if !amplitude.is_finite() {
                return Err(format!("bad amplitude {amplitude}"));
            }
            Ok(FourierTerm {
                frequency,
                amplitude,
            })
        })
        .collect::<Result<_, String>>()?;
    Ok(Shear::new(axis, terms))
}

fn parse_curve(
    path: &str,
    v: &str,
    map: &SurfaceMap,
    base: &Path,
) -> Result<CurveSpec, ConfigError> {
    let err = |m: String| ConfigError::at(path, m);
    let mut tokens = v.split_whitespace();
    let shape = tokens
        .next()
        .ok_or_else(|| err("empty curve spec".into()))?;
    let rest: Vec<&str> = tokens.collect();
    if shape == "file" {
        let [p] = rest[..] else {
            return Err(err("expected `file <path>`".into()));
        };
        return Ok(CurveSpec::File { path: base.join(p) });
    }
    let num = |i: usize| -> Result<f64, ConfigError> {
        let t = rest
            .get(i)
            .ok_or_else(|| err(format!("{shape}: missing argument {}", i + 1)))?;
        t.parse::<f64>()
            .map_err(|_| err(format!("bad number {t:?}")))
    };
    let opt = |i: usize, d: f64| if rest.len() > i { num(i) } else { Ok(d) };
    let spec = match shape {
        "circle" => {
            let radius = num(2)?;
            if !(radius > 0.0 && radius < 0.5) {
                return Err(err(format!("radius must lie in (0, 0.5), got {radius}")));
            }
            CurveSpec::Circle {
                center: [num(0)?, num(1)?],
                radius,
                vertices: opt(3, 256.0)? as usize,
            }
        }
        "stadium" => {
            let angle = match rest.get(2).copied() {
                Some(dir @ ("unstable" | "stable")) => match map {
                    SurfaceMap::LinearHyperbolic(m) => {
                        let (u, s) = m.eigendirections();
                        let d = if dir == "unstable" { u } else { s };
                        d[1].atan2(d[0])
                    }
                    _ => return Err(err(format!("`{dir}` needs a linear hyperbolic map"))),
                },
                _ => num(2)?,
            };
            let (half_length, radius) = (num(3)?, num(4)?);
            if !(half_length > 0.0 && radius > 0.0 && half_length + radius < 0.5) {
                return Err(err(
                    "need half_length > 0, radius > 0, half_length + radius < 0.5".into(),
                ));
            }
            CurveSpec::Stadium {
                center: [num(0)?, num(1)?],
                angle,
                half_length,
                radius,
                spacing: opt(5, 0.01)?,
            }
        }
        "flat" => {
            let (p, q) = (num(0)?, num(1)?);
            if p.fract() != 0.0 || q.fract() != 0.0 {
                return Err(err("homology class must be integers".into()));
            }
            CurveSpec::Flat {
                class: [p as i64, q as i64],
                offset: num(2)?,
                vertices: opt(3, 64.0)? as usize,
            }
        }
        other => return Err(err(format!("unknown curve shape {other:?}"))),
    };
    Ok(spec)
}

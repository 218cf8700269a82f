//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use entropylab::barcode2d::barcode_entropy;
use entropylab::barcode2d::{
    bigon_reduce, bigon_reduce_with, transverse_intersections, Barcode, ReductionOrder,
};
use entropylab::curves::{evolve, ClosedCurve, EvolveOptions, TubularRegion};
use entropylab::dynamics::{SurfaceMap, TorusPoint};
use entropylab::entropy::{
    covering_bound_check, separated_chord_entropy, volume_growth_entropy,
    volume_growth_entropy_limit, yomdin_sup,
};
use entropylab::experiment::{self, ExperimentConfig, FileRecord};
use entropylab::measures::{
    chord_measure_schedule, common_period_collection, empirical_orbit_measure,
    find_approximate_chords, periodic_measure, pushforward, tv_distance, GridMeasure,
    PeriodicOrbit,
};

const H_TOP: f64 = 0.962_423_650_119_206_9;

type Outcome = Result<(bool, String), String>;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bench_curves() -> (ClosedCurve, ClosedCurve) {
    let cfg = bench_config();
    (
        cfg.l0.unwrap().build("L0").unwrap(),
        cfg.l.unwrap().build("L").unwrap(),
    )
}

fn bench_config() -> ExperimentConfig {
    ExperimentConfig::from_path(&root().join("configs/cat_chain.ini")).expect("benchmark config")
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn estimate(v: &Value, key: &str) -> Result<f64, String> {
    v["summary"][key]
        .as_f64()
        .ok_or_else(|| format!("missing {key}"))
}

struct Bench {
    dir: tempfile::TempDir,
    manifest: Value,
    seconds: f64,
}

fn run_benchmark() -> Result<Bench, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = bench_config();
    cfg.out_dir = Some(dir.path().to_path_buf());
    let t = Instant::now();
    let m = experiment::run(&cfg).map_err(|e| e.to_string())?;
    let seconds = t.elapsed().as_secs_f64();
    if let Some(e) = &m.error {
        return Err(e.clone());
    }
    let manifest = serde_json::to_value(&m).map_err(|e| e.to_string())?;
    Ok(Bench {
        dir,
        manifest,
        seconds,
    })
}

fn criterion_1(b: &Bench) -> Outcome {
    let h_vol = estimate(&b.manifest, "h_vol")?;
    let h_lb = estimate(&b.manifest, "h_metric_lb")?;
    let h_bc = estimate(&b.manifest, "h_barcode")?;
    let ref_ok = (SurfaceMap::cat().reference_topological_entropy().unwrap() - H_TOP).abs() < 1e-12;
    let pass = ref_ok
        && (h_vol - H_TOP).abs() <= 0.05
        && (h_lb - H_TOP).abs() <= 0.10
        && (h_bc - H_TOP).abs() <= 0.10
        && b.seconds < 300.0;
    Ok((
        pass,
        format!("h_vol={h_vol:.4} h_metric_lb={h_lb:.4} h_barcode={h_bc:.4} h_top={H_TOP:.4} runtime={:.1}s", b.seconds),
    ))
}

fn criterion_2(b: &Bench) -> Outcome {
    let table = read_json(&b.dir.path().join("chain_check.json"))?;
    let v: Vec<f64> = table["values"]
        .as_array()
        .ok_or("no values")?
        .iter()
        .map(|x| x.as_f64().unwrap_or(f64::NAN))
        .collect();
    let (h_bc, h_vol, h_lb) = (v[0], v[1], v[2]);
    let pass = h_bc <= h_vol + 0.1 && h_vol <= h_lb + 0.1 && table["pass"] == Value::Bool(true);
    Ok((pass, format!("h_barcode={h_bc:.4} <= h_vol+0.1={:.4}; h_vol <= h_metric_lb+0.1={:.4}; chain-check pass={}", h_vol + 0.1, h_lb + 0.1, table["pass"])))
}

fn random_circle(rng: &mut ChaCha8Rng, rmin: f64, rmax: f64, n: usize) -> ClosedCurve {
    let r = rng.random_range(rmin..rmax);
    ClosedCurve::round_circle([rng.random(), rng.random()], r, n).unwrap()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let map = SurfaceMap::cat();
    let opts = EvolveOptions::default();
    let mut worst: f64 = 0.0;
    let mut fails = 0;
    for _ in 0..20 {
        let l0 = random_circle(&mut rng, 0.03, 0.1, 96);
        let l = random_circle(&mut rng, 0.03, 0.1, 96);
        let u = TubularRegion::new(l, rng.random_range(0.05..0.15)).map_err(|e| e.to_string())?;
        let eta = rng.random_range(0.04..0.1);
        let k = rng.random_range(3..=6);
        let rep = covering_bound_check(&map, &l0, &u, eta, k, 1 << 14, 16, &opts)
            .map_err(|e| e.to_string())?;
        worst = worst.max(rep.ratio);
        if rep.ratio.is_nan() || rep.ratio > 1.05 {
            fails += 1;
        }
    }
    Ok((
        fails == 0,
        format!("20 configs, max LHS/RHS = {worst:.4}, failures = {fails}"),
    ))
}

fn criterion_4() -> Outcome {
    let (l0, _) = bench_curves();
    let map = SurfaceMap::cat();
    let opts = EvolveOptions::default();
    let etas = [0.2, 0.1, 0.05, 0.025];
    let sups: Vec<f64> = etas
        .iter()
        .map(|&e| yomdin_sup(&map, &l0, e, 10, 16, &opts))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let pass = sups.windows(2).all(|w| w[1] < w[0]);
    Ok((pass, format!("sup E_10 over eta' {etas:?} = {sups:.4?}")))
}

fn measure_csv_total(path: &Path) -> Result<f64, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    text.lines()
        .skip(1)
        .map(|l| {
            l.rsplit(',')
                .next()
                .unwrap()
                .parse::<f64>()
                .map_err(|e| e.to_string())
        })
        .sum()
}

fn criterion_5() -> Outcome {
    let map = SurfaceMap::cat();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst_total: f64 = 0.0;
    let mut note = |m: &GridMeasure| worst_total = worst_total.max((m.total() - 1.0).abs());

    // pushforward near-invariance, atoms transported exactly (slack 0)
    let slack = 1e-12;
    let mut push_ok = true;
    for i in 0..100 {
        let k = rng.random_range(1..=500);
        let x = TorusPoint::new(rng.random(), rng.random());
        let mu = empirical_orbit_measure(&map.orbit(x, k), 32).map_err(|e| e.to_string())?;
        let nu = pushforward(&mu, &map, 0, i).map_err(|e| e.to_string())?;
        note(&mu);
        note(&nu);
        push_ok &=
            tv_distance(&mu, &nu).map_err(|e| e.to_string())? <= 2.0 / (k + 1) as f64 + slack;
    }

    // periodic collections at a common period
    let mut common_worst: f64 = 0.0;
    for (q, pts) in [(5u32, 4usize), (7, 6), (11, 9), (13, 5)] {
        let orbits: Vec<PeriodicOrbit> = (0..pts)
            .map(|_| {
                let x = TorusPoint::new(
                    rng.random_range(0..q) as f64 / q as f64,
                    rng.random_range(0..q) as f64 / q as f64,
                );
                let mut y = map.apply(x);
                let mut p = 1;
                while y.distance(x) > 1e-9 {
                    y = map.apply(y);
                    p += 1;
                }
                PeriodicOrbit::new(&map, x, p)
            })
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let common = common_period_collection(&map, &orbits).map_err(|e| e.to_string())?;
        let a = periodic_measure(&orbits, 64).map_err(|e| e.to_string())?;
        let b = periodic_measure(&common, 64).map_err(|e| e.to_string())?;
        note(&a);
        note(&b);
        common_worst = common_worst.max(tv_distance(&a, &b).map_err(|e| e.to_string())?);
    }

    // Birkhoff averages of long orbits
    let uniform = GridMeasure::uniform(16).map_err(|e| e.to_string())?;
    let mut birkhoff_worst: f64 = 0.0;
    for _ in 0..10 {
        let x = TorusPoint::new(rng.random(), rng.random());
        let m = empirical_orbit_measure(&map.orbit(x, 999_999), 16).map_err(|e| e.to_string())?;
        note(&m);
        birkhoff_worst = birkhoff_worst.max(tv_distance(&m, &uniform).map_err(|e| e.to_string())?);
    }

    // chord measures and the CLI measure outputs
    let (l0, l) = bench_curves();
    for st in chord_measure_schedule(&map, &l0, &l, &[0.1, 0.05], 6, 1 << 14, 32)
        .map_err(|e| e.to_string())?
    {
        if let Some(m) = &st.measure {
            note(m);
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for kind in ["periodic-measures", "chord-measure"] {
        let text = format!(
            "kind = {kind}\n[curves]\nl0 = stadium 0.3 0.3 unstable 0.15 0.05\nl = stadium 0.6 0.55 stable 0.15 0.05\n[schedule]\nk_max = 6\nsamples = 20000\neta = 0.1 0.05\n[output]\ndir = {kind}\n"
        );
        let cfg = ExperimentConfig::parse(&text, dir.path()).map_err(|e| e.to_string())?;
        experiment::run(&cfg).map_err(|e| e.to_string())?;
        for f in std::fs::read_dir(dir.path().join(kind)).map_err(|e| e.to_string())? {
            let p = f.map_err(|e| e.to_string())?.path();
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            if name.ends_with(".csv")
                && (name.starts_with("measure_R") || name.starts_with("eta_periodic_R"))
            {
                worst_total = worst_total.max((measure_csv_total(&p)? - 1.0).abs());
            }
        }
    }

    let pass = worst_total <= 1e-12 && push_ok && common_worst <= 1e-12 && birkhoff_worst < 0.05;
    Ok((
        pass,
        format!(
            "max |total-1| = {worst_total:.1e}; pushforward bound on 100 orbits: {push_ok}; common-period TV = {common_worst:.1e}; Birkhoff max TV = {birkhoff_worst:.4}"
        ),
    ))
}

/// Upper bound on the bottleneck distance between the finite bar lengths,
/// from the matching that pairs bars in order of length.
fn length_bottleneck(a: &Barcode, b: &Barcode) -> f64 {
    let (mut x, mut y) = (a.sorted_finite_lengths(), b.sorted_finite_lengths());
    x.reverse();
    y.reverse();
    let n = x.len().max(y.len());
    (0..n)
        .map(|i| match (x.get(i), y.get(i)) {
            (Some(p), Some(q)) => (p - q).abs().min(p.max(*q) / 2.0),
            (Some(p), None) | (None, Some(p)) => p / 2.0,
            (None, None) => 0.0,
        })
        .fold(0.0, f64::max)
}

fn conserved(bc: &Barcode, intersections: usize) -> bool {
    2 * bc.finite_count() + bc.infinite_count() == intersections
}

fn monotone(bc: &Barcode) -> bool {
    let eps: Vec<f64> = (0..40).map(|i| 1e-6 * 1.5f64.powi(i)).collect();
    eps.windows(2)
        .all(|w| bc.count_bars(w[1]) <= bc.count_bars(w[0]))
}

fn criterion_6(b: &Bench) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut conservation = true;
    let mut mono = true;
    // the benchmark runs
    let summary = read_json(&b.dir.path().join("barcode_summary.json"))?;
    for s in summary.as_array().ok_or("no summary")? {
        let (f, i, n) = (
            s["finite"].as_u64(),
            s["infinite"].as_u64(),
            s["intersections"].as_u64(),
        );
        conservation &= matches!((f, i, n), (Some(f), Some(i), Some(n)) if 2 * f + i == n);
    }
    // random equal-area contractible pairs
    let mut infinite = 0;
    let mut pairs = Vec::new();
    while pairs.len() < 50 {
        let r = rng.random_range(0.03..0.15);
        let c = [rng.random::<f64>(), rng.random::<f64>()];
        let a = ClosedCurve::round_circle(c, r, rng.random_range(32..160)).unwrap();
        let (hl, rho) = (
            rng.random_range(0.2..1.0) * r,
            rng.random_range(0.3..0.8) * r,
        );
        // disk of the same area as a stadium with these proportions
        let b = if pairs.len() % 2 == 0 {
            let d = rng.random_range(0.2..1.8) * r;
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            ClosedCurve::round_circle(
                [c[0] + d * t.cos(), c[1] + d * t.sin()],
                r,
                rng.random_range(32..160),
            )
            .unwrap()
        } else {
            let scale = (std::f64::consts::PI * r * r
                / (4.0 * hl * rho + std::f64::consts::PI * rho * rho))
                .sqrt();
            let (hl, rho) = (hl * scale, rho * scale);
            if hl + rho >= 0.45 {
                continue;
            }
            let d = rng.random_range(0.1..0.9) * r;
            ClosedCurve::stadium(
                [c[0] + d, c[1]],
                rng.random_range(0.0..3.0),
                hl,
                rho,
                0.005,
                16,
            )
            .unwrap()
        };
        let (used, xs, _) =
            transverse_intersections(&a, &b, pairs.len() as u64).map_err(|e| e.to_string())?;
        if xs.is_empty() {
            continue;
        }
        let bc = bigon_reduce_with(&used, &b, &xs, ReductionOrder::SmallestFirst)
            .map_err(|e| e.to_string())?;
        conservation &= conserved(&bc, xs.len());
        mono &= monotone(&bc);
        infinite += bc.infinite_count();
        pairs.push((used, b, bc));
    }
    // iterated pairs and jitter stability
    let map = SurfaceMap::cat();
    let (l0, l) = bench_curves();
    let iterates = evolve(&l0, &map, 5, &EvolveOptions::default()).map_err(|e| e.to_string())?;
    let mut cases: Vec<(ClosedCurve, ClosedCurve, Barcode)> = pairs.into_iter().take(10).collect();
    for a in iterates.into_iter().skip(2) {
        let bc = bigon_reduce(&a, &l).map_err(|e| e.to_string())?;
        cases.push((a, l.clone(), bc));
    }
    let delta = 1e-4;
    let mut stable = true;
    let mut worst: f64 = 0.0;
    for (i, (a, bcurve, bc)) in cases.iter().enumerate() {
        let c = a.length() + bcurve.length();
        let j = a
            .jittered(delta, 900 + i as u64)
            .map_err(|e| e.to_string())?;
        let (used, xs, _) =
            transverse_intersections(&j, bcurve, i as u64).map_err(|e| e.to_string())?;
        let bj = bigon_reduce_with(&used, bcurve, &xs, ReductionOrder::SmallestFirst)
            .map_err(|e| e.to_string())?;
        conservation &= conserved(&bj, xs.len());
        mono &= monotone(&bj) && monotone(bc);
        let d = length_bottleneck(bc, &bj);
        worst = worst.max(d / (c * delta));
        stable &= d <= c * delta;
    }
    let pass = conservation && infinite == 0 && stable && mono;
    Ok((
        pass,
        format!("conservation: {conservation}; infinite bars over 50 pairs = {infinite}; jitter d/(C*delta) max = {worst:.3}; b_eps monotone: {mono}"),
    ))
}

fn criterion_7() -> Outcome {
    let id = SurfaceMap::identity();
    let opts = EvolveOptions::default();
    let l0 = ClosedCurve::round_circle([0.4, 0.4], 0.1, 128).unwrap();
    let l = ClosedCurve::round_circle([0.5, 0.45], 0.1, 128).unwrap();
    let u = TubularRegion::new(l.clone(), 0.05).map_err(|e| e.to_string())?;
    let e = |x: &dyn std::fmt::Display| x.to_string();
    let mut slopes = vec![
        volume_growth_entropy(&id, &l0, &u, 8, &opts)
            .map_err(|x| e(&x))?
            .estimate
            .slope,
        volume_growth_entropy_limit(&id, &l0, &l, &[0.1, 0.05, 0.025], 8, &opts)
            .map_err(|x| e(&x))?
            .limit,
        separated_chord_entropy(
            &id,
            &l0,
            &u,
            0.05,
            &(1..=8).collect::<Vec<_>>(),
            4096,
            false,
        )
        .map_err(|x| e(&x))?
        .estimate
        .slope,
    ];
    let bc = barcode_entropy(&id, &l0, &l, &[0.01, 0.001], 8, &opts, 0).map_err(|x| e(&x))?;
    slopes.extend(bc.estimates.iter().flatten().map(|x| x.slope));
    let flat = slopes.iter().all(|s| s.abs() < 1e-9);

    let far = ClosedCurve::round_circle([0.9, 0.9], 0.05, 64).unwrap();
    let empty_barcode = bigon_reduce(&l0, &far).map_err(|x| e(&x))?.is_empty();
    let far_u = TubularRegion::new(far.clone(), 0.05).map_err(|x| e(&x))?;
    let chords = find_approximate_chords(&l0, &far_u, &id, 6, 4096).map_err(|x| e(&x))?;
    let pass = flat && empty_barcode && chords.is_empty();
    Ok((
        pass,
        format!("identity slopes {slopes:?}; disjoint barcode empty: {empty_barcode}; disjoint chords: {}", chords.len()),
    ))
}

fn cli_run(config: &Path, threads: usize, out: &Path) -> Result<Vec<FileRecord>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_entropylab"))
        .arg("run")
        .arg(config)
        .args(["--threads", &threads.to_string(), "--out"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        ));
    }
    experiment::hash_outputs(out).map_err(|e| e.to_string())
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    let mut same = true;
    for kind in ["chain-check", "chord-measure", "periodic-measures"] {
        let cfg = dir.path().join(format!("{kind}.ini"));
        let text = format!(
            "kind = {kind}\nseed = 7\n[curves]\nl0 = stadium 0.3 0.3 unstable 0.15 0.05\nl = stadium 0.6 0.55 stable 0.15 0.05\n[schedule]\nk_max = 8\nsamples = 65536\neta = 0.1 0.05\n"
        );
        std::fs::write(&cfg, text).map_err(|e| e.to_string())?;
        let a = cli_run(&cfg, 1, &dir.path().join(format!("{kind}-1")))?;
        let b = cli_run(&cfg, 8, &dir.path().join(format!("{kind}-8")))?;
        compared += a.len();
        same &= !a.is_empty() && a == b;
    }
    Ok((
        same,
        format!("{compared} files hashed, identical across --threads 1 and 8: {same}"),
    ))
}

fn main() {
    let names = [
        "cat-map benchmark",
        "chain ordering",
        "covering inequality",
        "local Yomdin trend",
        "measure suite",
        "barcode suite",
        "identity and disjoint controls",
        "determinism",
    ];
    let bench = run_benchmark();
    let outcomes: Vec<Outcome> = vec![
        bench.as_ref().map_err(Clone::clone).and_then(criterion_1),
        bench.as_ref().map_err(Clone::clone).and_then(criterion_2),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        bench.as_ref().map_err(Clone::clone).and_then(criterion_6),
        criterion_7(),
        criterion_8(),
    ];
    let mut failed = 0;
    for (i, (name, o)) in names.iter().zip(&outcomes).enumerate() {
        let (pass, detail) = match o {
            Ok((p, d)) => (*p, d.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} ({name}): {}  {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

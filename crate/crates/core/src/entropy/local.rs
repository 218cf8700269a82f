use rayon::prelude::*;
use serde::Serialize;

use super::chords::{seed_params, separated_seeds};
use super::{log_plus, scan_iterates, EntropyError};
use crate::curves::{
    evolve_open_arc, length_in_region, polyline_length, ClosedCurve, CurveError, EvolveOptions,
    TubularRegion,
};
use crate::dynamics::SurfaceMap;

/// Default number of probe points when locating a Bowen ball on a curve.
pub const BALL_SAMPLES: usize = 4096;
const BISECT_STEPS: usize = 60;
/// Slack allowed by the covering inequality check.
pub const COVERING_SLACK: f64 = 0.05;

fn dk_from(
    map: &SurfaceMap,
    orbit: &[crate::dynamics::TorusPoint],
    y: crate::dynamics::TorusPoint,
    cap: f64,
) -> f64 {
    let mut y = y;
    let mut d: f64 = 0.0;
    for (i, &o) in orbit.iter().enumerate() {
        d = d.max(o.distance(y));
        if d >= cap {
            return d;
        }
        if i + 1 < orbit.len() {
            y = map.apply(y);
        }
    }
    d
}

/// Arcs `[a, b]` (arc parameters, `b` possibly past the curve length) of
/// `l0 ∩ B_k(x, η′)` where `x` sits at parameter `s`. Components narrower
/// than the probe spacing may be missed, except the one containing `x`.
fn ball_arcs(
    map: &SurfaceMap,
    l0: &ClosedCurve,
    cum: &[f64],
    s: f64,
    eta_p: f64,
    k: usize,
    probes: usize,
) -> Vec<(f64, f64)> {
    let total = cum[l0.len()];
    let orbit = map.orbit(l0.point_at(cum, s), k).points;
    let x0 = orbit[0];
    let inside = |t: f64| {
        let y = l0.point_at(cum, t);
        // d_k dominates the time-zero distance
        x0.distance(y) < eta_p && dk_from(map, &orbit, y, eta_p) < eta_p
    };
    let h = total / probes as f64;
    let flags: Vec<bool> = (0..probes)
        .into_par_iter()
        .map(|j| j == 0 || inside(s + j as f64 * h))
        .collect();
    if flags.iter().all(|&f| f) {
        return vec![(s, s + total)];
    }
    let edge = |lo: f64, hi: f64, lo_in: bool| {
        // boundary between an inside and an outside parameter
        let (mut a, mut b) = (lo, hi);
        for _ in 0..BISECT_STEPS {
            let m = 0.5 * (a + b);
            if inside(m) == lo_in {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    // rotate so the scan starts at an outside probe
    let start = flags.iter().position(|&f| !f).unwrap();
    let mut arcs = Vec::new();
    let mut open: Option<f64> = None;
    for step in 1..=probes {
        let j = start + step;
        let (prev, cur) = ((j - 1) % probes, j % probes);
        let (tp, tc) = (s + (j - 1) as f64 * h, s + j as f64 * h);
        match (flags[prev], flags[cur]) {
            (false, true) => open = Some(edge(tc, tp, true)),
            (true, false) => {
                let a = open.take().expect("run opened");
                arcs.push((a, edge(tp, tc, true)));
            }
            _ => {}
        }
    }
    arcs
}

/// `length(φ^k(l0 ∩ B_k(x, η′)))` with `x` at arc parameter `s`.
pub fn local_volume(
    map: &SurfaceMap,
    l0: &ClosedCurve,
    s: f64,
    eta_p: f64,
    k: usize,
    opts: &EvolveOptions,
    probes: usize,
) -> Result<f64, CurveError> {
    let cum = l0.cumulative_lengths();
    let arcs = ball_arcs(map, l0, &cum, s, eta_p, k, probes);
    let mut vol = 0.0;
    for (a, b) in arcs {
        let pts = l0.arc_points(&cum, a, b);
        if pts.len() < 2 {
            continue;
        }
        vol += polyline_length(&evolve_open_arc(&pts, map, k, opts)?);
    }
    Ok(vol)
}

/// `E_k(x, η′) = log⁺ length(φ^k(l0 ∩ B_k(x, η′))) / k`.
pub fn local_volume_growth(
    map: &SurfaceMap,
    l0: &ClosedCurve,
    s: f64,
    eta_p: f64,
    k: usize,
    opts: &EvolveOptions,
) -> Result<f64, EntropyError> {
    if k == 0 || !(eta_p > 0.0) {
        return Err(EntropyError::InvalidParameter(format!(
            "k = {k}, eta' = {eta_p}"
        )));
    }
    Ok(log_plus(local_volume(map, l0, s, eta_p, k, opts, BALL_SAMPLES)?) / k as f64)
}

/// Maximum of `E_k(x, η′)` over `points` equidistributed `x` on `l0`.
pub fn yomdin_sup(
    map: &SurfaceMap,
    l0: &ClosedCurve,
    eta_p: f64,
    k: usize,
    points: usize,
    opts: &EvolveOptions,
) -> Result<f64, EntropyError> {
    let mut best = f64::NEG_INFINITY;
    for s in seed_params(l0, points) {
        best = best.max(local_volume_growth(map, l0, s, eta_p, k, opts)?);
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringReport {
    pub k: usize,
    pub eta: f64,
    pub eta_prime: f64,
    pub lhs: f64,
    pub separated: usize,
    /// Members of the separated set whose local volume was evaluated.
    pub probed: usize,
    pub max_local: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Compares `length(L_k ∩ U)` with `|S_k(η)| · max_x length(φ^k(l0 ∩
/// B_k(x, 2η)))`. The maximum runs over at most `max_probes` evenly spaced
/// members of `S_k(η)`, which can only shrink the right side.
#[allow(clippy::too_many_arguments)]
pub fn covering_bound_check(
    map: &SurfaceMap,
    l0: &ClosedCurve,
    u: &TubularRegion,
    eta: f64,
    k: usize,
    samples: usize,
    max_probes: usize,
    opts: &EvolveOptions,
) -> Result<CoveringReport, EntropyError> {
    if !(eta > 0.0) || samples == 0 || max_probes == 0 {
        return Err(EntropyError::InvalidParameter(format!(
            "eta = {eta}, samples = {samples}, probes = {max_probes}"
        )));
    }
    let mut lhs = 0.0;
    scan_iterates(l0, map, k, opts, |j, c| {
        if j == k {
            lhs = length_in_region(c, u);
        }
    })?;
    let kept = separated_seeds(map, l0, u, eta, k, &seed_params(l0, samples));
    let eta_prime = 2.0 * eta;
    let stride = kept.len().div_ceil(max_probes).max(1);
    let probes: Vec<f64> = kept.iter().step_by(stride).copied().collect();
    let mut max_local: f64 = 0.0;
    for &s in &probes {
        max_local = max_local.max(local_volume(map, l0, s, eta_prime, k, opts, BALL_SAMPLES)?);
    }
    let rhs = kept.len() as f64 * max_local;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(CoveringReport {
        k,
        eta,
        eta_prime,
        lhs,
        separated: kept.len(),
        probed: probes.len(),
        max_local,
        rhs,
        ratio,
        pass: lhs <= rhs * (1.0 + COVERING_SLACK),
    })
}

//! Growth-rate estimators: volume growth of iterated curves, separated
//! chord counts in the Bowen metric, and local volume growth.

mod chords;
mod local;

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

pub use chords::{
    dk_distance, separated_chord_entropy, separated_chords, SeparatedChordReport, SeparatedSet,
};
pub use local::{covering_bound_check, local_volume_growth, yomdin_sup, CoveringReport};

use crate::curves::{
    evolve_step, length_in_region, ClosedCurve, CurveError, EvolveOptions, TubularRegion,
};
use crate::dynamics::SurfaceMap;

/// Points dropped from the start of a series by [`Window::Default`].
pub const TRANSIENT: usize = 3;
/// Minimum number of positive values a fit needs.
pub const MIN_POSITIVE: usize = 4;

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error("need at least {needed} positive values in the fit window, found {found}")]
    InsufficientData { found: usize, needed: usize },
    #[error("invalid growth series: {0}")]
    InvalidSeries(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vertex budget {limit} exceeded after {completed} steps")]
    BudgetExceeded {
        limit: usize,
        completed: usize,
        partial: GrowthSeries,
    },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

impl EntropyError {
    /// Wraps a curve error, attaching `partial` if it is a budget overrun.
    pub fn budget(partial: GrowthSeries, e: CurveError) -> Self {
        match e {
            CurveError::VertexBudgetExceeded { limit, completed } => EntropyError::BudgetExceeded {
                limit,
                completed,
                partial,
            },
            other => EntropyError::Curve(other),
        }
    }
}

/// `log v` for `v > 0`, and `0` at `v = 0`.
pub fn log_plus(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        0.0
    }
}

/// Nonnegative values indexed by strictly increasing `k`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GrowthSeries {
    points: Vec<(usize, f64)>,
}

impl GrowthSeries {
    pub fn new(points: Vec<(usize, f64)>) -> Result<Self, EntropyError> {
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(EntropyError::InvalidSeries(format!(
                    "k not strictly increasing at {} -> {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(k, v)) = points.iter().find(|p| !(p.1 >= 0.0 && p.1.is_finite())) {
            return Err(EntropyError::InvalidSeries(format!("value {v} at k={k}")));
        }
        Ok(GrowthSeries { points })
    }

    pub fn points(&self) -> &[(usize, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn value_at(&self, k: usize) -> Option<f64> {
        self.points.iter().find(|p| p.0 == k).map(|p| p.1)
    }

    pub fn log_plus(&self) -> Vec<(usize, f64)> {
        self.points.iter().map(|&(k, v)| (k, log_plus(v))).collect()
    }

    /// CSV with header `k,value,log_plus`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,value,log_plus")?;
        for &(k, v) in &self.points {
            writeln!(w, "{k},{v},{}", log_plus(v))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Method {
    VolumeGrowth { eta: f64 },
    SeparatedChords { eta: f64 },
    Barcode { eps: f64 },
    Series,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Window {
    /// Everything except the first [`TRANSIENT`] points.
    Default,
    All,
    /// Inclusive range of `k`.
    Range(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub window: (usize, usize),
    pub r_squared: f64,
    pub method: Method,
}

/// Least-squares slope of `log⁺ value` against `k` over `window`.
pub fn growth_rate(
    s: &GrowthSeries,
    window: Window,
    method: Method,
) -> Result<EntropyEstimate, EntropyError> {
    let pts: Vec<(usize, f64)> = match window {
        Window::All => s.points.clone(),
        Window::Default => s.points.iter().skip(TRANSIENT).copied().collect(),
        Window::Range(a, b) => s
            .points
            .iter()
            .filter(|p| p.0 >= a && p.0 <= b)
            .copied()
            .collect(),
    };
    let found = pts.iter().filter(|p| p.1 > 0.0).count();
    if found < MIN_POSITIVE {
        return Err(EntropyError::InsufficientData {
            found,
            needed: MIN_POSITIVE,
        });
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = pts.iter().map(|p| log_plus(p.1)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(EntropyEstimate {
        slope,
        intercept,
        window: (pts[0].0, pts[pts.len() - 1].0),
        r_squared,
        method,
    })
}

/// Calls `f(k, L_k)` for `k = 0..=k_max`. Stops at the first failed step.
pub fn scan_iterates<F: FnMut(usize, &ClosedCurve)>(
    l0: &ClosedCurve,
    map: &SurfaceMap,
    k_max: usize,
    opts: &EvolveOptions,
    mut f: F,
) -> Result<(), CurveError> {
    f(0, l0);
    let mut cur = l0.clone();
    for k in 1..=k_max {
        cur = match evolve_step(&cur, map, opts) {
            Ok(c) => c,
            Err(CurveError::VertexBudgetExceeded { limit, .. }) => {
                return Err(CurveError::VertexBudgetExceeded {
                    limit,
                    completed: k - 1,
                })
            }
            Err(e) => return Err(e),
        };
        f(k, &cur);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeGrowth {
    pub eta: f64,
    pub series: GrowthSeries,
    pub estimate: EntropyEstimate,
}

/// Lengths of `L_k ∩ U` for each region, `k = 0..=k_max`.
fn region_series(
    map: &SurfaceMap,
    l0: &ClosedCurve,
    regions: &[TubularRegion],
    k_max: usize,
    opts: &EvolveOptions,
) -> Result<Vec<GrowthSeries>, EntropyError> {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(k_max + 1); regions.len()];
    let scanned = scan_iterates(l0, map, k_max, opts, |k, c| {
        for (row, u) in rows.iter_mut().zip(regions) {
            row.push((k, length_in_region(c, u)));
        }
    });
    let series: Vec<GrowthSeries> = rows
        .into_iter()
        .map(GrowthSeries::new)
        .collect::<Result<_, _>>()?;
    match scanned {
        Ok(()) => Ok(series),
        Err(e) => Err(EntropyError::budget(
            series.into_iter().next().unwrap_or_default(),
            e,
        )),
    }
}

fn check_k_max(k_max: usize) -> Result<(), EntropyError> {
    if k_max < 6 {
        return Err(EntropyError::InvalidParameter(format!(
            "k_max must be at least 6, got {k_max}"
        )));
    }
    Ok(())
}

/// Growth rate of `length(L_k ∩ U)`.
pub fn volume_growth_entropy(
    map: &SurfaceMap,
    l0: &ClosedCurve,
    u: &TubularRegion,
    k_max: usize,
    opts: &EvolveOptions,
) -> Result<VolumeGrowth, EntropyError> {
    check_k_max(k_max)?;
    let series = region_series(map, l0, std::slice::from_ref(u), k_max, opts)?.remove(0);
    let estimate = growth_rate(
        &series,
        Window::Default,
        Method::VolumeGrowth { eta: u.radius() },
    )?;
    Ok(VolumeGrowth {
        eta: u.radius(),
        series,
        estimate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeLimit {
    pub stages: Vec<VolumeGrowth>,
    /// Minimum slope over the schedule.
    pub limit: f64,
}

/// Volume growth into shrinking neighborhoods `U_η` of `L`, one stage per
/// schedule entry; a single evolution is shared by all stages.
pub fn volume_growth_entropy_limit(
    map: &SurfaceMap,
    l0: &ClosedCurve,
    l: &ClosedCurve,
    etas: &[f64],
    k_max: usize,
    opts: &EvolveOptions,
) -> Result<VolumeLimit, EntropyError> {
    check_k_max(k_max)?;
    check_schedule(etas)?;
    let regions: Vec<TubularRegion> = etas
        .iter()
        .map(|&e| TubularRegion::new(l.clone(), e))
        .collect::<Result<_, _>>()?;
    let all = region_series(map, l0, &regions, k_max, opts)?;
    let stages: Vec<VolumeGrowth> = all
        .into_iter()
        .zip(etas)
        .map(|(series, &eta)| {
            let estimate = growth_rate(&series, Window::Default, Method::VolumeGrowth { eta })?;
            Ok(VolumeGrowth {
                eta,
                series,
                estimate,
            })
        })
        .collect::<Result<_, EntropyError>>()?;
    let limit = stages
        .iter()
        .map(|s| s.estimate.slope)
        .fold(f64::INFINITY, f64::min);
    Ok(VolumeLimit { stages, limit })
}

pub(crate) fn check_schedule(etas: &[f64]) -> Result<(), EntropyError> {
    if etas.is_empty() || etas.iter().any(|&e| !(e > 0.0)) || etas.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(EntropyError::InvalidParameter(format!(
            "schedule must be positive and strictly decreasing: {etas:?}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccessibilityReport {
    pub accessible: bool,
    /// `(η, k values with L_k ∩ U_η ≠ ∅)`, `1 <= k <= k_max`.
    pub hits: Vec<(f64, Vec<usize>)>,
}

/// Whether `L_k` meets every `U_η` of the schedule at least twice.
pub fn accessibility_check(
    map: &SurfaceMap,
    l0: &ClosedCurve,
    l: &ClosedCurve,
    etas: &[f64],
    k_max: usize,
    opts: &EvolveOptions,
) -> Result<AccessibilityReport, EntropyError> {
    check_schedule(etas)?;
    let regions: Vec<TubularRegion> = etas
        .iter()
        .map(|&e| TubularRegion::new(l.clone(), e))
        .collect::<Result<_, _>>()?;
    let mut hits: Vec<Vec<usize>> = vec![Vec::new(); etas.len()];
    scan_iterates(l0, map, k_max, opts, |k, c| {
        if k == 0 {
            return;
        }
        for (h, u) in hits.iter_mut().zip(&regions) {
            if length_in_region(c, u) > 0.0 {
                h.push(k);
            }
        }
    })?;
    let accessible = hits.iter().all(|h| h.len() >= 2);
    Ok(AccessibilityReport {
        accessible,
        hits: etas.iter().copied().zip(hits).collect(),
    })
}

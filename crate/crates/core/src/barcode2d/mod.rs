//! Persistence barcodes of transverse curve pairs on the torus by bigon
//! reduction, and the barcode entropy built from their bar counts.

mod reduce;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use reduce::ReductionOrder;

use crate::curves::{intersections, ClosedCurve, CurveError, EvolveOptions, IntersectionPoint};
use crate::dynamics::SurfaceMap;
use crate::entropy::{
    growth_rate, scan_iterates, EntropyError, EntropyEstimate, GrowthSeries, Method, Window,
};

/// Jitter applied to a curve when a pair is not transverse.
pub const PERTURBATION: f64 = 1e-9;
const MAX_PERTURBATIONS: u64 = 8;

#[derive(Debug, Error)]
pub enum BarcodeError {
    #[error("inconsistent intersection data: {0}")]
    InconsistentIntersectionData(String),
    #[error("bigon reduction did not terminate after {0} cancellations")]
    NonTerminating(usize),
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bar {
    pub birth: f64,
    /// Positive, or `f64::INFINITY`.
    pub length: f64,
}

impl Bar {
    pub fn is_infinite(&self) -> bool {
        self.length.is_infinite()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Barcode {
    pub bars: Vec<Bar>,
    pub labels: (String, String),
    pub k: usize,
}

impl Barcode {
    pub fn empty(labels: (String, String), k: usize) -> Self {
        Barcode {
            bars: Vec::new(),
            labels,
            k,
        }
    }

    /// Number of bars longer than `eps`, infinite bars included.
    pub fn count_bars(&self, eps: f64) -> usize {
        self.bars.iter().filter(|b| b.length > eps).count()
    }

    pub fn finite_count(&self) -> usize {
        self.bars.iter().filter(|b| !b.is_infinite()).count()
    }

    pub fn infinite_count(&self) -> usize {
        self.bars.len() - self.finite_count()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// Finite bar lengths in increasing order.
    pub fn sorted_finite_lengths(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .bars
            .iter()
            .filter(|b| !b.is_infinite())
            .map(|b| b.length)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// CSV with header `birth,length`; infinite bars are written as `inf`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "birth,length")?;
        for b in &self.bars {
            if b.is_infinite() {
                writeln!(w, "{},inf", b.birth)?;
            } else {
                writeln!(w, "{},{}", b.birth, b.length)?;
            }
        }
        Ok(())
    }
}

/// Two generators joined by an arc of each curve, bounding a disk.
/// Arcs are `(start, end, forward)` in arc-length parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bigon {
    pub corners: (IntersectionPoint, IntersectionPoint),
    pub arc_a: (f64, f64, bool),
    pub arc_b: (f64, f64, bool),
    pub area: f64,
}

/// Smallest-area bigon among corner pairs adjacent along both curves.
pub fn find_innermost_bigon(
    a: &ClosedCurve,
    b: &ClosedCurve,
    xs: &[IntersectionPoint],
) -> Result<Option<Bigon>, BarcodeError> {
    Ok(reduce::Reducer::new(a, b, xs)?.smallest_bigon())
}

/// Barcode of a transverse pair, cancelling smallest bigons first.
pub fn bigon_reduce(a: &ClosedCurve, b: &ClosedCurve) -> Result<Barcode, BarcodeError> {
    let xs = intersections(a, b)?;
    reduce::reduce(a, b, &xs, ReductionOrder::SmallestFirst)
}

/// Reduction of precomputed intersections with an explicit order.
pub fn bigon_reduce_with(
    a: &ClosedCurve,
    b: &ClosedCurve,
    xs: &[IntersectionPoint],
    order: ReductionOrder,
) -> Result<Barcode, BarcodeError> {
    reduce::reduce(a, b, xs, order)
}

/// Intersections of `a` with `b`, jittering `a` by [`PERTURBATION`] until
/// the pair is transverse. Returns the curve actually used and the number
/// of perturbations applied.
pub fn transverse_intersections(
    a: &ClosedCurve,
    b: &ClosedCurve,
    seed: u64,
) -> Result<(ClosedCurve, Vec<IntersectionPoint>, u64), BarcodeError> {
    let mut cur = a.clone();
    for attempt in 0..=MAX_PERTURBATIONS {
        match intersections(&cur, b) {
            Ok(xs) => return Ok((cur, xs, attempt)),
            Err(CurveError::DegenerateIntersection { .. }) if attempt < MAX_PERTURBATIONS => {
                cur = a.jittered(PERTURBATION, seed.wrapping_add(attempt))?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

/// `ε₀·2^{-i}` for `i < steps`.
pub fn default_eps_schedule(eps0: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|i| eps0 * 0.5f64.powi(i as i32)).collect()
}

/// Counts of one reduction, kept per `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BarcodeSummary {
    pub k: usize,
    pub intersections: usize,
    pub finite: usize,
    pub infinite: usize,
    pub perturbations: u64,
    /// `b_ε` for each schedule entry.
    pub counts: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct BarcodeEntropyReport {
    pub eps: Vec<f64>,
    pub series: Vec<GrowthSeries>,
    /// `None` where the series for that ε has too few positive counts.
    pub estimates: Vec<Option<EntropyEstimate>>,
    /// Maximum of the available per-ε slopes.
    pub estimate: f64,
    pub summaries: Vec<BarcodeSummary>,
    pub barcodes: Vec<Barcode>,
}

/// Barcode entropy of `(L_k, L)` for `k = 0..=k_max`, one fit per ε.
pub fn barcode_entropy(
    map: &SurfaceMap,
    l0: &ClosedCurve,
    l: &ClosedCurve,
    eps: &[f64],
    k_max: usize,
    opts: &EvolveOptions,
    seed: u64,
) -> Result<BarcodeEntropyReport, BarcodeError> {
    if let Some(&e) = eps.iter().find(|&&e| !(e > 0.0)) {
        return Err(BarcodeError::InvalidEpsilon(e));
    }
    if eps.is_empty() {
        return Err(EntropyError::InvalidParameter("empty epsilon schedule".into()).into());
    }
    let mut iterates = Vec::with_capacity(k_max + 1);
    let scanned = scan_iterates(l0, map, k_max, opts, |k, c| iterates.push((k, c.clone())));
    let barcodes: Vec<(Barcode, BarcodeSummary)> = iterates
        .par_iter()
        .map(|(k, c)| -> Result<_, BarcodeError> {
            let k = *k;
            let (used, xs, perturbations) = transverse_intersections(c, l, seed ^ k as u64)?;
            let bc = bigon_reduce_with(&used, l, &xs, ReductionOrder::SmallestFirst)?;
            let summary = BarcodeSummary {
                k,
                intersections: xs.len(),
                finite: bc.finite_count(),
                infinite: bc.infinite_count(),
                perturbations,
                counts: eps.iter().map(|&e| bc.count_bars(e)).collect(),
            };
            Ok((bc, summary))
        })
        .collect::<Result<_, _>>()?;
    let series: Vec<GrowthSeries> = (0..eps.len())
        .map(|j| {
            GrowthSeries::new(
                barcodes
                    .iter()
                    .map(|(_, s)| (s.k, s.counts[j] as f64))
                    .collect(),
            )
        })
        .collect::<Result<_, _>>()?;
    if let Err(e) = scanned {
        let partial = series.into_iter().last().unwrap_or_default();
        return Err(EntropyError::budget(partial, e).into());
    }
    let fits: Vec<Result<EntropyEstimate, EntropyError>> = series
        .iter()
        .zip(eps)
        .map(|(s, &e)| growth_rate(s, Window::Default, Method::Barcode { eps: e }))
        .collect();
    if fits.iter().all(Result::is_err) {
        return Err(fits
            .into_iter()
            .find_map(Result::err)
            .expect("nonempty schedule")
            .into());
    }
    let estimates: Vec<Option<EntropyEstimate>> = fits.into_iter().map(Result::ok).collect();
    let estimate = estimates
        .iter()
        .flatten()
        .map(|e| e.slope)
        .fold(f64::NEG_INFINITY, f64::max);
    let (barcodes, summaries) = barcodes.into_iter().unzip();
    Ok(BarcodeEntropyReport {
        eps: eps.to_vec(),
        series,
        estimates,
        estimate,
        summaries,
        barcodes,
    })
}

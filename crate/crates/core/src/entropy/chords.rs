use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{growth_rate, EntropyError, EntropyEstimate, GrowthSeries, Method, Window};
use crate::curves::{ClosedCurve, TubularRegion};
use crate::dynamics::{SurfaceMap, TorusPoint};
use crate::measures::ChordCollection;

const CHUNK: usize = 1 << 16;

/// Bowen distance `max_{0<=i<=k} d(φ^i x, φ^i y)`.
pub fn dk_distance(map: &SurfaceMap, x: TorusPoint, y: TorusPoint, k: usize) -> f64 {
    let (mut a, mut b) = (x, y);
    let mut d = a.distance(b);
    for _ in 0..k {
        a = map.apply(a);
        b = map.apply(b);
        d = d.max(a.distance(b));
    }
    d
}

/// Greedy maximal `η`-separated set in the Bowen metric `d_k`, fed one
/// orbit at a time. Kept orbits are bucketed by two time slices, with a
/// few more slices stored inline as a cheap filter; full orbits are
/// recomputed from the start point only for candidates passing it.
pub struct SeparatedSet<'m> {
    map: &'m SurfaceMap,
    eta: f64,
    k: usize,
    cells: i64,
    key_times: [usize; 2],
    filter_times: [usize; FILTER_SLICES],
    buckets: HashMap<[i64; 4], Vec<Entry>>,
    kept: Vec<TorusPoint>,
}

const FILTER_SLICES: usize = 3;

#[derive(Clone, Copy)]
struct Entry {
    slices: [TorusPoint; FILTER_SLICES],
    id: u32,
}

#[inline]
fn close(a: TorusPoint, b: TorusPoint, eta: f64) -> bool {
    let dx = (a.x - b.x).abs();
    let dy = (a.y - b.y).abs();
    dx.min(1.0 - dx) <= eta && dy.min(1.0 - dy) <= eta
}

impl<'m> SeparatedSet<'m> {
    pub fn new(map: &'m SurfaceMap, eta: f64, k: usize) -> Self {
        // cells of side >= 2η, so an η-ball meets at most two per axis
        let cells = ((0.5 / eta).floor() as i64).clamp(1, 1 << 12);
        SeparatedSet {
            map,
            eta,
            k,
            cells,
            key_times: [k / 3, k],
            filter_times: [0, k / 3, 2 * k / 3],
            buckets: HashMap::new(),
            kept: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn kept(&self) -> &[TorusPoint] {
        &self.kept
    }

    fn axis(&self, c: f64) -> (i64, i64) {
        let n = self.cells;
        let f = c * n as f64;
        let i = (f.floor() as i64).rem_euclid(n);
        let nb = if f - f.floor() < 0.5 { i - 1 } else { i + 1 };
        (i, nb.rem_euclid(n))
    }

    fn within(&self, idx: u32, orbit: &[TorusPoint]) -> bool {
        let mut y = self.kept[idx as usize];
        for (i, &o) in orbit.iter().enumerate() {
            if y.distance(o) > self.eta {
                return false;
            }
            if i < self.k {
                y = self.map.apply(y);
            }
        }
        true
    }

    /// Keeps the orbit iff it is more than `η` from every kept orbit in
    /// `d_k`. `orbit` holds the `k+1` points starting at the seed.
    pub fn offer(&mut self, orbit: &[TorusPoint]) -> bool {
        debug_assert_eq!(orbit.len(), self.k + 1);
        if let Some(last) = self.kept.len().checked_sub(1) {
            if self.within(last as u32, orbit) {
                return false;
            }
        }
        let (p, q) = (orbit[self.key_times[0]], orbit[self.key_times[1]]);
        let axes = [
            self.axis(p.x),
            self.axis(p.y),
            self.axis(q.x),
            self.axis(q.y),
        ];
        let probe = self.filter_times.map(|t| orbit[t]);
        let eta = self.eta;
        for mask in 0..16u32 {
            let mut key = [0i64; 4];
            let mut dup = false;
            for (d, ax) in axes.iter().enumerate() {
                let use_nb = mask >> d & 1 == 1;
                if use_nb && ax.1 == ax.0 {
                    dup = true;
                }
                key[d] = if use_nb { ax.1 } else { ax.0 };
            }
            if dup {
                continue;
            }
            if let Some(entries) = self.buckets.get(&key) {
                let hit = entries.iter().any(|e| {
                    e.slices.iter().zip(&probe).all(|(&a, &b)| close(a, b, eta))
                        && self.within(e.id, orbit)
                });
                if hit {
                    return false;
                }
            }
        }
        let id = self.kept.len() as u32;
        self.kept.push(orbit[0]);
        let home = [axes[0].0, axes[1].0, axes[2].0, axes[3].0];
        self.buckets
            .entry(home)
            .or_default()
            .push(Entry { slices: probe, id });
        true
    }
}

/// Indices (into `chords.chords`) of the greedy maximal `η`-separated
/// sub-collection, in canonical order.
pub fn separated_chords(chords: &ChordCollection, map: &SurfaceMap, eta: f64) -> Vec<usize> {
    let mut set = SeparatedSet::new(map, eta, chords.k);
    chords
        .chords
        .iter()
        .enumerate()
        .filter(|(_, o)| set.offer(&o.points))
        .map(|(i, _)| i)
        .collect()
}

/// `samples` arc-length equidistributed parameters on `c`.
pub(crate) fn seed_params(c: &ClosedCurve, samples: usize) -> Vec<f64> {
    let total = c.length();
    (0..samples)
        .map(|j| (j as f64 + 0.5) * total / samples as f64)
        .collect()
}

/// Runs the greedy separated-set selection over the seeds of `l0` whose
/// `k`-th image lies in `u`, in the given seed order. Returns the arc
/// parameters of the kept seeds.
pub(crate) fn separated_seeds(
    map: &SurfaceMap,
    l0: &ClosedCurve,
    u: &TubularRegion,
    eta: f64,
    k: usize,
    params: &[f64],
) -> Vec<f64> {
    let cum = l0.cumulative_lengths();
    let mut set = SeparatedSet::new(map, eta, k);
    let mut kept = Vec::new();
    for chunk in params.chunks(CHUNK) {
        let orbits: Vec<Option<Vec<TorusPoint>>> = chunk
            .par_iter()
            .map(|&s| {
                let o = map.orbit(l0.point_at(&cum, s), k).points;
                u.contains(o[k]).then_some(o)
            })
            .collect();
        for (o, &s) in orbits.iter().zip(chunk) {
            if let Some(o) = o {
                if set.offer(o) {
                    kept.push(s);
                }
            }
        }
    }
    kept
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparatedChordReport {
    pub eta: f64,
    pub samples: usize,
    pub series: GrowthSeries,
    pub estimate: EntropyEstimate,
    /// Counts with the seed order reversed, same `k` values.
    pub reversed_counts: Option<Vec<usize>>,
}

/// Growth of `|S_k(η)|` over `ks`, from `samples` seeds on `l0`. Seeds are
/// not refined toward the core of `u`; undersampling can only lower the
/// counts.
pub fn separated_chord_entropy(
    map: &SurfaceMap,
    l0: &ClosedCurve,
    u: &TubularRegion,
    eta: f64,
    ks: &[usize],
    samples: usize,
    with_reversed: bool,
) -> Result<SeparatedChordReport, EntropyError> {
    if !(eta > 0.0) || samples == 0 {
        return Err(EntropyError::InvalidParameter(format!(
            "eta = {eta}, samples = {samples}"
        )));
    }
    let params = seed_params(l0, samples);
    let counts: Vec<usize> = ks
        .iter()
        .map(|&k| separated_seeds(map, l0, u, eta, k, &params).len())
        .collect();
    let reversed_counts = with_reversed.then(|| {
        let rev: Vec<f64> = params.iter().rev().copied().collect();
        ks.iter()
            .map(|&k| separated_seeds(map, l0, u, eta, k, &rev).len())
            .collect()
    });
    let series = GrowthSeries::new(
        ks.iter()
            .zip(&counts)
            .map(|(&k, &c)| (k, c as f64))
            .collect(),
    )?;
    let estimate = growth_rate(&series, Window::Default, Method::SeparatedChords { eta })?;
    Ok(SeparatedChordReport {
        eta,
        samples,
        series,
        estimate,
        reversed_counts,
    })
}

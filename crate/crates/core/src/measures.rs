//! Empirical measures of orbit segments and chord collections, binned on a
//! dyadic grid of the torus, plus the detection of approximate chords and
//! approximately periodic orbits.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::curves::{ClosedCurve, TubularRegion};
use crate::dynamics::{OrbitSegment, SurfaceMap, TorusPoint};

pub const DEFAULT_RESOLUTION: usize = 64;
/// Largest common period `common_period_collection` accepts.
pub const MAX_COMMON_PERIOD: u64 = 1 << 20;
/// Tolerance for a point to count as periodic.
pub const PERIODIC_TOL: f64 = 1e-9;
const REFINE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("empty collection")]
    EmptyCollection,
    #[error("resolution mismatch: {0} vs {1}")]
    ResolutionMismatch(usize, usize),
    #[error("resolution must be a power of two, got {0}")]
    InvalidResolution(usize),
    #[error("common period {0} exceeds {MAX_COMMON_PERIOD}")]
    PeriodOverflow(u64),
    #[error("orbit {index} is not periodic: d(x, φ^k x) = {distance:e}")]
    NotPeriodic { index: usize, distance: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Probability measure binned on an `R×R` grid. Bin `(i, j)` covers
/// `[i/R, (i+1)/R) × [j/R, (j+1)/R)`. Empirical measures also remember
/// their atoms so they can be transported exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMeasure {
    resolution: usize,
    weights: Vec<f64>,
    atoms: Option<Vec<(TorusPoint, f64)>>,
}

fn check_resolution(r: usize) -> Result<(), MeasureError> {
    if r == 0 || !r.is_power_of_two() {
        return Err(MeasureError::InvalidResolution(r));
    }
    Ok(())
}

impl GridMeasure {
    pub fn uniform(r: usize) -> Result<Self, MeasureError> {
        check_resolution(r)?;
        Ok(GridMeasure {
            resolution: r,
            weights: vec![1.0 / (r * r) as f64; r * r],
            atoms: None,
        })
    }

    pub fn point_mass(r: usize, p: TorusPoint) -> Result<Self, MeasureError> {
        Self::from_atoms(r, vec![(p, 1.0)])
    }

    /// Binned measure of weighted points; the weights must sum to 1.
    pub fn from_atoms(r: usize, atoms: Vec<(TorusPoint, f64)>) -> Result<Self, MeasureError> {
        check_resolution(r)?;
        let mut weights = vec![0.0; r * r];
        for &(p, w) in &atoms {
            weights[Self::bin_index(r, p)] += w;
        }
        Ok(GridMeasure {
            resolution: r,
            weights,
            atoms: Some(atoms),
        })
    }

    /// Row-major index `i*R + j` of the bin containing `p`.
    pub fn bin_index(r: usize, p: TorusPoint) -> usize {
        let (i, j) = Self::bin(r, p);
        i * r + j
    }

    pub fn bin(r: usize, p: TorusPoint) -> (usize, usize) {
        let f = |c: f64| ((c * r as f64) as usize).min(r - 1);
        (f(p.x), f(p.y))
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.resolution + j]
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn atoms(&self) -> Option<&[(TorusPoint, f64)]> {
        self.atoms.as_deref()
    }

    /// The same binned weights with the atoms forgotten.
    pub fn binned_only(&self) -> Self {
        GridMeasure {
            atoms: None,
            ..self.clone()
        }
    }

    /// CSV `i,j,weight`, one row per bin.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,j,weight")?;
        let r = self.resolution;
        for i in 0..r {
            for j in 0..r {
                writeln!(w, "{i},{j},{}", self.weights[i * r + j])?;
            }
        }
        Ok(())
    }
}

/// `½ Σ |a − b|` over bins.
pub fn tv_distance(a: &GridMeasure, b: &GridMeasure) -> Result<f64, MeasureError> {
    if a.resolution != b.resolution {
        return Err(MeasureError::ResolutionMismatch(a.resolution, b.resolution));
    }
    let s: f64 = a
        .weights
        .iter()
        .zip(&b.weights)
        .map(|(x, y)| (x - y).abs())
        .sum();
    Ok((0.5 * s).min(1.0))
}

fn counts_measure(r: usize, points: &[TorusPoint]) -> Vec<u64> {
    points
        .par_chunks(1 << 14)
        .fold(
            || vec![0u64; r * r],
            |mut h, chunk| {
                for &p in chunk {
                    h[GridMeasure::bin_index(r, p)] += 1;
                }
                h
            },
        )
        .reduce(
            || vec![0u64; r * r],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Mass `1/(k+1)` at each point of `O_k(x)`.
pub fn empirical_orbit_measure(o: &OrbitSegment, r: usize) -> Result<GridMeasure, MeasureError> {
    check_resolution(r)?;
    let n = o.points.len() as f64;
    let weights = counts_measure(r, &o.points)
        .into_iter()
        .map(|c| c as f64 / n)
        .collect();
    let w = 1.0 / n;
    Ok(GridMeasure {
        resolution: r,
        weights,
        atoms: Some(o.points.iter().map(|&p| (p, w)).collect()),
    })
}

/// Arithmetic mean of the orbit measures.
pub fn mean_orbit_measure(orbits: &[OrbitSegment], r: usize) -> Result<GridMeasure, MeasureError> {
    if orbits.is_empty() {
        return Err(MeasureError::EmptyCollection);
    }
    let m = orbits.len() as f64;
    let atoms: Vec<(TorusPoint, f64)> = orbits
        .iter()
        .flat_map(|o| {
            let w = 1.0 / (m * o.points.len() as f64);
            o.points.iter().map(move |&p| (p, w))
        })
        .collect();
    GridMeasure::from_atoms(r, atoms)
}

/// Orbit segments `O_k(x)` with `x` on a source curve and `φ^k(x)` in a
/// region.
#[derive(Clone, Debug)]
pub struct ChordCollection {
    pub k: usize,
    pub chords: Vec<OrbitSegment>,
    /// Arc parameter of each chord's start on `source`.
    pub params: Vec<f64>,
    pub region: TubularRegion,
    pub source: ClosedCurve,
}

impl ChordCollection {
    pub fn len(&self) -> usize {
        self.chords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chords.is_empty()
    }

    /// CSV `x0,y0,k`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x0,y0,k")?;
        for c in &self.chords {
            writeln!(w, "{},{},{}", c.start.x, c.start.y, c.k)?;
        }
        Ok(())
    }
}

pub fn empirical_collection_measure(
    g: &ChordCollection,
    r: usize,
) -> Result<GridMeasure, MeasureError> {
    mean_orbit_measure(&g.chords, r)
}

/// Golden-section minimization of `f` on `[a, b]`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Chords from `samples` arc-length equidistributed seeds on `source`. Each
/// seed whose `k`-th image lands in `region` is moved, within half a seed
/// spacing, to a local minimizer of the distance from its `k`-th image to
/// the region's core.
pub fn find_approximate_chords(
    source: &ClosedCurve,
    region: &TubularRegion,
    map: &SurfaceMap,
    k: usize,
    samples: usize,
) -> Result<ChordCollection, MeasureError> {
    if samples == 0 {
        return Err(MeasureError::InvalidParameter(
            "samples must be at least 1".into(),
        ));
    }
    let cum = source.cumulative_lengths();
    let total = cum[source.len()];
    let h = total / samples as f64;
    let cap = region.radius().min(0.5);
    let found: Vec<Option<(f64, OrbitSegment)>> = (0..samples)
        .into_par_iter()
        .map(|j| {
            let s = (j as f64 + 0.5) * h;
            let end = map.iterate(source.point_at(&cum, s), k);
            if !region.contains(end) {
                return None;
            }
            let dist =
                |t: f64| region.distance_capped(map.iterate(source.point_at(&cum, t), k), cap);
            let t = golden_min(dist, s - 0.5 * h, s + 0.5 * h, REFINE_TOL);
            let best = if dist(t) <= dist(s)
                && region.contains(map.iterate(source.point_at(&cum, t), k))
            {
                t
            } else {
                s
            };
            let best = best.rem_euclid(total);
            Some((best, map.orbit(source.point_at(&cum, best), k)))
        })
        .collect();
    let (params, chords) = found.into_iter().flatten().unzip();
    Ok(ChordCollection {
        k,
        chords,
        params,
        region: region.clone(),
        source: source.clone(),
    })
}

/// Seeds with `d(x, φ^k x) < η`, with their orbit segments, in seed order.
pub fn eta_periodic_orbits(
    map: &SurfaceMap,
    eta: f64,
    k: usize,
    seeds: &[TorusPoint],
) -> Result<Vec<OrbitSegment>, MeasureError> {
    if !(eta > 0.0) {
        return Err(MeasureError::InvalidParameter(format!(
            "eta must be positive, got {eta}"
        )));
    }
    Ok(seeds
        .par_iter()
        .map(|&x| map.orbit(x, k))
        .filter(|o| o.start.distance(o.end()) < eta)
        .collect())
}

/// A closed orbit `x, φ(x), ..., φ^{period-1}(x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    pub period: usize,
    pub points: Vec<TorusPoint>,
}

impl PeriodicOrbit {
    /// Orbit of `x` under `map`, checked to close up after `period` steps.
    pub fn new(map: &SurfaceMap, x: TorusPoint, period: usize) -> Result<Self, MeasureError> {
        if period == 0 {
            return Err(MeasureError::InvalidParameter(
                "period must be positive".into(),
            ));
        }
        let mut o = map.orbit(x, period).points;
        let d = x.distance(o[period]);
        if d >= PERIODIC_TOL {
            return Err(MeasureError::NotPeriodic {
                index: 0,
                distance: d,
            });
        }
        o.pop();
        Ok(PeriodicOrbit { period, points: o })
    }
}

/// Mean over orbits of the uniform measure on each orbit's period points.
pub fn periodic_measure(orbits: &[PeriodicOrbit], r: usize) -> Result<GridMeasure, MeasureError> {
    if orbits.is_empty() {
        return Err(MeasureError::EmptyCollection);
    }
    let m = orbits.len() as f64;
    let atoms = orbits
        .iter()
        .flat_map(|o| {
            let w = 1.0 / (m * o.period as f64);
            o.points.iter().map(move |&p| (p, w))
        })
        .collect();
    GridMeasure::from_atoms(r, atoms)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Re-traverses every orbit up to the least common multiple `K` of the
/// periods. All returned orbits have period `K`.
pub fn common_period_collection(
    map: &SurfaceMap,
    orbits: &[PeriodicOrbit],
) -> Result<Vec<PeriodicOrbit>, MeasureError> {
    if orbits.is_empty() {
        return Err(MeasureError::EmptyCollection);
    }
    let mut big_k: u64 = 1;
    for (index, o) in orbits.iter().enumerate() {
        let d = o.points[0].distance(map.iterate(o.points[o.period - 1], 1));
        if d >= PERIODIC_TOL {
            return Err(MeasureError::NotPeriodic { index, distance: d });
        }
        let p = o.period as u64;
        big_k = big_k / gcd(big_k, p) * p;
        if big_k > MAX_COMMON_PERIOD {
            return Err(MeasureError::PeriodOverflow(big_k));
        }
    }
    let big_k = big_k as usize;
    Ok(orbits
        .iter()
        .map(|o| PeriodicOrbit {
            period: big_k,
            points: o.points.iter().copied().cycle().take(big_k).collect(),
        })
        .collect())
}

/// Pushforward of `mu` under `map`. Atoms are transported exactly when
/// known; otherwise each bin with positive weight sends its mass through
/// `mc_samples / R²` stratified uniform samples, seeded per bin.
pub fn pushforward(
    mu: &GridMeasure,
    map: &SurfaceMap,
    mc_samples: usize,
    seed: u64,
) -> Result<GridMeasure, MeasureError> {
    let r = mu.resolution;
    if let Some(atoms) = &mu.atoms {
        let moved = atoms.par_iter().map(|&(p, w)| (map.apply(p), w)).collect();
        return GridMeasure::from_atoms(r, moved);
    }
    if mc_samples < r * r {
        return Err(MeasureError::InvalidParameter(format!(
            "mc_samples {mc_samples} below R² = {}",
            r * r
        )));
    }
    let per_bin = mc_samples / (r * r);
    let side = (per_bin as f64).sqrt().floor().max(1.0) as usize;
    let per_bin = side * side;
    let cell = 1.0 / r as f64;
    let moved: Vec<Vec<(usize, f64)>> = mu
        .weights
        .par_iter()
        .enumerate()
        .map(|(b, &w)| {
            if w == 0.0 {
                return Vec::new();
            }
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ (b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let (i, j) = (b / r, b % r);
            let m = w / per_bin as f64;
            let mut out = Vec::with_capacity(per_bin);
            for a in 0..side {
                for c in 0..side {
                    // one jittered sample per sub-cell
                    let x = (i as f64 + (a as f64 + rng.random::<f64>()) / side as f64) * cell;
                    let y = (j as f64 + (c as f64 + rng.random::<f64>()) / side as f64) * cell;
                    out.push((
                        GridMeasure::bin_index(r, map.apply(TorusPoint::new(x, y))),
                        m,
                    ));
                }
            }
            out
        })
        .collect();
    let mut weights = vec![0.0; r * r];
    for list in moved {
        for (b, m) in list {
            weights[b] += m;
        }
    }
    Ok(GridMeasure {
        resolution: r,
        weights,
        atoms: None,
    })
}

/// First `k <= k_max` with `d(x, φ^k x) < dist` and
/// `tv(δ_{O_k(x)}, uniform) < tv_max` at resolution `r`.
pub fn ergodic_return(
    map: &SurfaceMap,
    x: TorusPoint,
    k_max: usize,
    dist: f64,
    tv_max: f64,
    r: usize,
) -> Result<Option<(usize, f64, f64)>, MeasureError> {
    check_resolution(r)?;
    let mut counts = vec![0u64; r * r];
    counts[GridMeasure::bin_index(r, x)] += 1;
    let u = 1.0 / (r * r) as f64;
    let mut y = x;
    for k in 1..=k_max {
        y = map.apply(y);
        counts[GridMeasure::bin_index(r, y)] += 1;
        let d = x.distance(y);
        if d < dist {
            let n = (k + 1) as f64;
            let tv = 0.5
                * counts
                    .iter()
                    .map(|&c| (c as f64 / n - u).abs())
                    .sum::<f64>();
            if tv < tv_max {
                return Ok(Some((k, d, tv)));
            }
        }
    }
    Ok(None)
}

/// One stage of a shrinking-neighborhood chord measure schedule.
#[derive(Clone, Debug)]
pub struct ChordStage {
    pub eta: f64,
    pub chords: usize,
    pub measure: Option<GridMeasure>,
    /// TV distance to the previous stage's measure, when both exist.
    pub tv_to_previous: Option<f64>,
}

/// Chord measures for `U_η ↓ L` along a decreasing schedule at fixed `k`.
pub fn chord_measure_schedule(
    map: &SurfaceMap,
    l0: &ClosedCurve,
    l: &ClosedCurve,
    etas: &[f64],
    k: usize,
    samples: usize,
    r: usize,
) -> Result<Vec<ChordStage>, MeasureError> {
    let mut stages: Vec<ChordStage> = Vec::with_capacity(etas.len());
    for &eta in etas {
        let region = TubularRegion::new(l.clone(), eta)
            .map_err(|e| MeasureError::InvalidParameter(e.to_string()))?;
        let g = find_approximate_chords(l0, &region, map, k, samples)?;
        let measure = if g.is_empty() {
            None
        } else {
            Some(empirical_collection_measure(&g, r)?)
        };
        let tv_to_previous = match (stages.last().and_then(|s| s.measure.as_ref()), &measure) {
            (Some(a), Some(b)) => Some(tv_distance(a, b)?),
            _ => None,
        };
        stages.push(ChordStage {
            eta,
            chords: g.len(),
            measure,
            tv_to_previous,
        });
    }
    Ok(stages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::TORUS_DIAMETER;

    fn cat() -> SurfaceMap {
        SurfaceMap::cat()
    }

    #[test]
    fn orbit_measure_examples() {
        let o = cat().orbit(TorusPoint::new(0.0, 0.0), 17);
        let m = empirical_orbit_measure(&o, 8).unwrap();
        assert_eq!(m.weight(0, 0), 1.0);
        let o = cat().orbit(TorusPoint::new(0.1, 0.3), 1);
        let m = empirical_orbit_measure(&o, 4).unwrap();
        let mut w: Vec<f64> = m.weights().iter().copied().filter(|&w| w > 0.0).collect();
        w.sort_by(f64::total_cmp);
        assert_eq!(w, vec![0.5, 0.5]);
    }

    #[test]
    fn tv_examples() {
        let u = GridMeasure::uniform(2).unwrap();
        let p = GridMeasure::point_mass(2, TorusPoint::new(0.1, 0.1)).unwrap();
        let q = GridMeasure::point_mass(2, TorusPoint::new(0.9, 0.9)).unwrap();
        assert_eq!(tv_distance(&u, &u).unwrap(), 0.0);
        assert_eq!(tv_distance(&p, &q).unwrap(), 1.0);
        assert!((tv_distance(&u, &p).unwrap() - 0.75).abs() < 1e-15);
        let v = GridMeasure::uniform(4).unwrap();
        assert!(matches!(
            tv_distance(&u, &v),
            Err(MeasureError::ResolutionMismatch(2, 4))
        ));
        assert!(GridMeasure::uniform(3).is_err());
    }

    #[test]
    fn collection_means() {
        let o = cat().orbit(TorusPoint::new(0.21, 0.67), 9);
        let one = empirical_orbit_measure(&o, 16).unwrap();
        let single = mean_orbit_measure(std::slice::from_ref(&o), 16).unwrap();
        assert!(tv_distance(&one, &single).unwrap() < 1e-15);
        let many = mean_orbit_measure(&vec![o.clone(); 5], 16).unwrap();
        assert!(tv_distance(&one, &many).unwrap() < 1e-15);
        let f = cat().orbit(TorusPoint::new(0.0, 0.0), 0);
        let g = SurfaceMap::identity().orbit(TorusPoint::new(0.7, 0.7), 0);
        let both = mean_orbit_measure(&[f, g], 4).unwrap();
        assert_eq!(both.weight(0, 0), 0.5);
        assert_eq!(both.weight(2, 2), 0.5);
        assert!(matches!(
            mean_orbit_measure(&[], 4),
            Err(MeasureError::EmptyCollection)
        ));
    }

    #[test]
    fn eta_periodic_examples() {
        let seeds = [TorusPoint::new(0.0, 0.0), TorusPoint::new(0.123, 0.456)];
        let kept = eta_periodic_orbits(&cat(), 1e-6, 7, &seeds).unwrap();
        assert_eq!(kept.len(), 1);
        let all = eta_periodic_orbits(&cat(), TORUS_DIAMETER + 1e-9, 7, &seeds).unwrap();
        assert_eq!(all.len(), 2);
    }

    /// Exact enumeration of the period-5 points `(a/11, b/11)`: the cat
    /// matrix has order 5 modulo 11, so every such point has period
    /// dividing 5.
    #[test]
    fn rational_period_five_points_are_kept() {
        let mut a = [[1i64, 0], [0, 1]];
        for _ in 0..5 {
            a = [
                [(2 * a[0][0] + a[1][0]) % 11, (2 * a[0][1] + a[1][1]) % 11],
                [(a[0][0] + a[1][0]) % 11, (a[0][1] + a[1][1]) % 11],
            ];
        }
        assert_eq!(a, [[1, 0], [0, 1]]);
        let seeds: Vec<TorusPoint> = (0..11)
            .flat_map(|i| (0..11).map(move |j| TorusPoint::new(i as f64 / 11.0, j as f64 / 11.0)))
            .collect();
        let kept = eta_periodic_orbits(&cat(), 1e-9, 5, &seeds).unwrap();
        assert_eq!(kept.len(), 121);
    }

    #[test]
    fn common_period_examples() {
        let map = cat();
        let fixed = PeriodicOrbit::new(&map, TorusPoint::new(0.0, 0.0), 1).unwrap();
        // (1/5, 2/5) has period 2 under the cat map
        let two = PeriodicOrbit::new(&map, TorusPoint::new(0.2, 0.4), 2).unwrap();
        let three = PeriodicOrbit::new(&SurfaceMap::identity(), TorusPoint::new(0.5, 0.5), 3);
        assert!(three.is_ok());
        let both = common_period_collection(&map, &[fixed.clone(), two.clone()]).unwrap();
        assert!(both.iter().all(|o| o.period == 2));
        let m = periodic_measure(&both, 8).unwrap();
        let want = periodic_measure(&[fixed.clone(), two.clone()], 8).unwrap();
        assert!(tv_distance(&m, &want).unwrap() < 1e-12);
        assert_eq!(m.weight(0, 0), 0.5);
        assert!((m.total() - 1.0).abs() < 1e-12);
        assert!(PeriodicOrbit::new(&map, TorusPoint::new(0.2, 0.4), 3).is_err());
    }

    #[test]
    fn lcm_of_two_and_three() {
        let id = SurfaceMap::identity();
        let a = PeriodicOrbit::new(&id, TorusPoint::new(0.1, 0.1), 2).unwrap();
        let b = PeriodicOrbit::new(&id, TorusPoint::new(0.6, 0.1), 3).unwrap();
        let c = common_period_collection(&id, &[a, b]).unwrap();
        assert_eq!(c[0].period, 6);
        assert_eq!(c[1].points.len(), 6);
    }

    #[test]
    fn period_overflow() {
        let id = SurfaceMap::identity();
        let orbits: Vec<PeriodicOrbit> = [1021usize, 1031, 1033]
            .iter()
            .map(|&p| PeriodicOrbit::new(&id, TorusPoint::new(0.3, 0.3), p).unwrap())
            .collect();
        assert!(matches!(
            common_period_collection(&id, &orbits),
            Err(MeasureError::PeriodOverflow(_))
        ));
    }

    #[test]
    fn pushforward_examples() {
        let p = GridMeasure::point_mass(16, TorusPoint::new(0.0, 0.0)).unwrap();
        let q = pushforward(&p, &cat(), 0, 1).unwrap();
        assert_eq!(q.weights(), p.weights());
        let u = GridMeasure::uniform(16).unwrap();
        let n = 256 * 400;
        let pu = pushforward(&u, &cat(), n, 5).unwrap();
        assert!((pu.total() - 1.0).abs() < 1e-12);
        assert!(tv_distance(&pu, &u).unwrap() < 0.05);
        let o = cat().orbit(TorusPoint::new(0.3, 0.1), 200);
        let mo = empirical_orbit_measure(&o, 16).unwrap();
        let id = pushforward(&mo.binned_only(), &SurfaceMap::identity(), n, 5).unwrap();
        assert!(tv_distance(&id, &mo).unwrap() < 1e-12);
        assert!(pushforward(&u, &cat(), 10, 0).is_err());
    }

    #[test]
    fn chords_on_whole_torus_and_disjoint() {
        let l0 = ClosedCurve::round_circle([0.3, 0.3], 0.05, 64).unwrap();
        let whole = TubularRegion::new(l0.clone(), 1.0).unwrap();
        let g = find_approximate_chords(&l0, &whole, &cat(), 3, 200).unwrap();
        assert_eq!(g.len(), 200);
        let far = TubularRegion::new(
            ClosedCurve::round_circle([0.8, 0.8], 0.05, 64).unwrap(),
            0.05,
        )
        .unwrap();
        let g = find_approximate_chords(&l0, &far, &SurfaceMap::identity(), 3, 500).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn refined_chords_stay_valid() {
        let l0 = ClosedCurve::round_circle([0.3, 0.3], 0.05, 64).unwrap();
        let region = TubularRegion::new(
            ClosedCurve::round_circle([0.6, 0.55], 0.05, 64).unwrap(),
            0.02,
        )
        .unwrap();
        let g = find_approximate_chords(&l0, &region, &cat(), 6, 20000).unwrap();
        assert!(!g.is_empty());
        let cum = l0.cumulative_lengths();
        for (c, &s) in g.chords.iter().zip(&g.params) {
            assert_eq!(c.k, 6);
            assert!(c.start.distance(l0.point_at(&cum, s)) < 1e-9);
            assert!(region.contains(c.end()));
        }
        let m = empirical_collection_measure(&g, 32).unwrap();
        assert!((m.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ergodic_return_for_cat() {
        let hit = ergodic_return(
            &cat(),
            TorusPoint::new(0.3141, 0.2718),
            100_000,
            0.01,
            0.1,
            16,
        )
        .unwrap();
        let (k, d, tv) = hit.expect("return found");
        assert!(k <= 100_000 && d < 0.01 && tv < 0.1);
    }
}

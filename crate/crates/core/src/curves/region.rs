use rayon::prelude::*;

use super::{add, norm, point_segment_distance, scale, sub, ClosedCurve, CurveError, SegmentGrid};
use crate::dynamics::{TorusPoint, TORUS_DIAMETER};

/// Open `radius`-neighborhood of a closed curve in the flat metric.
#[derive(Clone, Debug)]
pub struct TubularRegion {
    core: ClosedCurve,
    radius: f64,
    grid: SegmentGrid,
}

impl TubularRegion {
    /// `radius` must be below 0.25 so the neighborhood never wraps onto
    /// itself, or at least the torus diameter (the whole torus).
    pub fn new(core: ClosedCurve, radius: f64) -> Result<Self, CurveError> {
        if !(radius > 0.0 && (radius < 0.25 || radius >= TORUS_DIAMETER)) {
            return Err(CurveError::InvalidRadius(radius));
        }
        let grid = SegmentGrid::for_curve(&core, 0.0, radius.min(0.25));
        Ok(TubularRegion { core, radius, grid })
    }

    pub fn core(&self) -> &ClosedCurve {
        &self.core
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_whole_torus(&self) -> bool {
        self.radius >= TORUS_DIAMETER
    }

    /// Same core, different radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self, CurveError> {
        Self::new(self.core.clone(), radius)
    }

    /// Distance from `p` to the core if it is below `cap`, otherwise a
    /// value `>= cap`.
    pub fn distance_capped(&self, p: TorusPoint, cap: f64) -> f64 {
        self.scan(p, cap, false)
    }

    fn scan(&self, p: TorusPoint, cap: f64, first_hit: bool) -> f64 {
        let cap = cap.min(0.5);
        let x = p.as_array();
        let mut ids = Vec::new();
        self.grid
            .query([x[0] - cap, x[1] - cap], [x[0] + cap, x[1] + cap], &mut ids);
        let mut best = f64::INFINITY;
        for &id in &ids {
            let q = self.core.vertex(id as usize).as_array();
            let d = self.core.edge_vector(id as usize);
            let lo = [q[0].min(q[0] + d[0]) - cap, q[1].min(q[1] + d[1]) - cap];
            let hi = [q[0].max(q[0] + d[0]) + cap, q[1].max(q[1] + d[1]) + cap];
            for tx in -1..=1 {
                let px = x[0] - tx as f64;
                if px < lo[0] || px > hi[0] {
                    continue;
                }
                for ty in -1..=1 {
                    let py = x[1] - ty as f64;
                    if py < lo[1] || py > hi[1] {
                        continue;
                    }
                    best = best.min(point_segment_distance([px, py], q, d));
                    if first_hit && best < cap {
                        return best;
                    }
                }
            }
        }
        best
    }
    /// Flat distance from `p` to the core polyline.
    pub fn distance(&self, p: TorusPoint) -> f64 {
        self.distance_capped(p, 0.5)
    }

    pub fn contains(&self, p: TorusPoint) -> bool {
        self.is_whole_torus() || self.scan(p, self.radius, true) < self.radius
    }

    /// Sub-intervals of `[0, 1]` where `a + t*d` lies inside the region.
    fn clip_segment(&self, a: [f64; 2], d: [f64; 2], ids: &mut Vec<u32>) -> Vec<(f64, f64)> {
        let r = self.radius;
        let lo = [a[0].min(a[0] + d[0]) - r, a[1].min(a[1] + d[1]) - r];
        let hi = [a[0].max(a[0] + d[0]) + r, a[1].max(a[1] + d[1]) + r];
        self.grid.query(lo, hi, ids);
        let mut spans = Vec::new();
        for &id in ids.iter() {
            let q = self.core.vertex(id as usize).as_array();
            let e = self.core.edge_vector(id as usize);
            let elo = [q[0].min(q[0] + e[0]), q[1].min(q[1] + e[1])];
            let ehi = [q[0].max(q[0] + e[0]), q[1].max(q[1] + e[1])];
            for tx in -1..=1 {
                for ty in -1..=1 {
                    let t = [tx as f64, ty as f64];
                    if elo[0] + t[0] > hi[0]
                        || ehi[0] + t[0] < lo[0]
                        || elo[1] + t[1] > hi[1]
                        || ehi[1] + t[1] < lo[1]
                    {
                        continue;
                    }
                    if let Some((s0, s1)) = line_capsule(a, d, add(q, t), e, r) {
                        let (s0, s1) = (s0.max(0.0), s1.min(1.0));
                        if s1 > s0 {
                            spans.push((s0, s1));
                        }
                    }
                }
            }
        }
        spans
    }
}

/// Parameters `s` with `dist(a + s*d, segment q..q+e) < r`, as one open
/// interval (the capsule is convex).
fn line_capsule(a: [f64; 2], d: [f64; 2], q: [f64; 2], e: [f64; 2], r: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut take = |iv: Option<(f64, f64)>| {
        if let Some((x, y)) = iv {
            lo = lo.min(x);
            hi = hi.max(y);
        }
    };
    take(line_disk(a, d, q, r));
    take(line_disk(a, d, add(q, e), r));
    let el = norm(e);
    if el > 0.0 {
        let u = scale(e, 1.0 / el);
        let n = [-u[1], u[0]];
        let w = sub(a, q);
        let strip = slab(dot(w, n), dot(d, n), -r, r);
        let along = slab(dot(w, u), dot(d, u), 0.0, el);
        if let (Some(x), Some(y)) = (strip, along) {
            let (s0, s1) = (x.0.max(y.0), x.1.min(y.1));
            if s1 > s0 {
                take(Some((s0, s1)));
            }
        }
    }
    (hi > lo).then_some((lo, hi))
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `{s : lo < c0 + s*c1 < hi}`.
fn slab(c0: f64, c1: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if c1 == 0.0 {
        return (c0 > lo && c0 < hi).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let (x, y) = ((lo - c0) / c1, (hi - c0) / c1);
    Some((x.min(y), x.max(y)))
}

fn line_disk(a: [f64; 2], d: [f64; 2], c: [f64; 2], r: f64) -> Option<(f64, f64)> {
    let w = sub(a, c);
    let qa = dot(d, d);
    let qb = dot(w, d);
    let qc = dot(w, w) - r * r;
    let disc = qb * qb - qa * qc;
    if qa == 0.0 || disc <= 0.0 {
        return None;
    }
    let root = disc.sqrt();
    Some(((-qb - root) / qa, (-qb + root) / qa))
}

fn merged_length(mut spans: Vec<(f64, f64)>) -> f64 {
    spans.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in spans {
        match cur {
            Some((ca, cb)) if a <= cb => cur = Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    if let Some((a, b)) = cur {
        total += b - a;
    }
    total
}

/// Total length of the parts of `curve` inside `region`.
pub fn length_in_region(curve: &ClosedCurve, region: &TubularRegion) -> f64 {
    if region.is_whole_torus() {
        return curve.length();
    }
    let per_edge: Vec<f64> = (0..curve.len())
        .into_par_iter()
        .map_init(Vec::new, |ids, i| {
            let a = curve.vertex(i).as_array();
            let d = curve.edge_vector(i);
            let frac = merged_length(region.clip_segment(a, d, ids));
            frac * d[0].hypot(d[1])
        })
        .collect();
    per_edge.iter().sum()
}

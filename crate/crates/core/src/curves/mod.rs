//! Closed polylines on the torus and the geometry the entropy estimators
//! consume: evolution under a map, length, clipping against tubular
//! neighborhoods, pairwise intersections and lifted areas.
//!
//! A curve is stored as torus-reduced vertices plus one integer vector per
//! edge. Edge `i` runs from `vertices[i]` to `vertices[i + 1]` (cyclically);
//! its lifted displacement is `vertices[i+1] - vertices[i] + edge_lifts[i]`.

mod evolve;
mod grid;
mod intersect;
mod io;
mod region;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dynamics::TorusPoint;

pub use evolve::{evolve, evolve_open_arc, evolve_step, EvolveOptions, DEFAULT_VERTEX_BUDGET};
pub use grid::SegmentGrid;
pub use intersect::{intersections, IntersectionPoint, TANGENCY_TOLERANCE};
pub use io::{read_curve_csv, write_curve_csv};
pub use region::{length_in_region, TubularRegion};

/// Edges must be shorter than this so nearest-translate arithmetic is valid.
pub const MAX_EDGE_LENGTH: f64 = 0.5;
const MIN_EDGE_LENGTH: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("a closed curve needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex and edge-lift counts differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("edge {0} has degenerate length {1}")]
    DegenerateEdge(usize, f64),
    #[error("edge {0} has length {1}, above the {MAX_EDGE_LENGTH} limit")]
    EdgeTooLong(usize, f64),
    #[error("refinement would exceed the vertex budget of {limit} (after {completed} steps)")]
    VertexBudgetExceeded { limit: usize, completed: usize },
    #[error("near-tangential intersection between edge {edge_a} and edge {edge_b}")]
    DegenerateIntersection { edge_a: usize, edge_b: usize },
    #[error("tubular radius {0} must lie in (0, 0.25) or cover the whole torus")]
    InvalidRadius(f64),
    #[error("homology class {0:?} is not primitive")]
    NonPrimitiveClass([i64; 2]),
    #[error("curve csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedCurve {
    vertices: Vec<TorusPoint>,
    edge_lifts: Vec<[i64; 2]>,
    pub label: String,
    pub generation: usize,
}

#[inline]
pub(crate) fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub(crate) fn scale(a: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] * s, a[1] * s]
}

#[inline]
pub(crate) fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

/// Integer vector `n` with `to - from - n` the lifted displacement `disp`.
#[inline]
pub(crate) fn lift_between(from: TorusPoint, to: TorusPoint, disp: [f64; 2]) -> [i64; 2] {
    [
        (disp[0] - (to.x - from.x)).round() as i64,
        (disp[1] - (to.y - from.y)).round() as i64,
    ]
}

impl ClosedCurve {
    pub fn new(
        vertices: Vec<TorusPoint>,
        edge_lifts: Vec<[i64; 2]>,
        label: impl Into<String>,
    ) -> Result<Self, CurveError> {
        if vertices.len() < 3 {
            return Err(CurveError::TooFewVertices(vertices.len()));
        }
        if vertices.len() != edge_lifts.len() {
            return Err(CurveError::LengthMismatch(vertices.len(), edge_lifts.len()));
        }
        let curve = ClosedCurve {
            vertices,
            edge_lifts,
            label: label.into(),
            generation: 0,
        };
        for i in 0..curve.len() {
            let l = norm(curve.edge_vector(i));
            if l <= MIN_EDGE_LENGTH {
                return Err(CurveError::DegenerateEdge(i, l));
            }
            if l >= MAX_EDGE_LENGTH {
                return Err(CurveError::EdgeTooLong(i, l));
            }
        }
        Ok(curve)
    }

    /// Builds a curve from consecutive lifted vertices. The closing edge
    /// runs from the last point to `points[0] + class`.
    pub fn from_lifted(
        points: &[[f64; 2]],
        class: [i64; 2],
        label: impl Into<String>,
    ) -> Result<Self, CurveError> {
        let n = points.len();
        let vertices: Vec<TorusPoint> = points.iter().map(|&p| TorusPoint::from_lift(p)).collect();
        let mut lifts = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = if i + 1 < n {
                (points[i], points[i + 1])
            } else {
                (
                    points[i],
                    add(points[0], [class[0] as f64, class[1] as f64]),
                )
            };
            let j = (i + 1) % n.max(1);
            lifts.push(lift_between(vertices[i], vertices[j], sub(b, a)));
        }
        Self::new(vertices, lifts, label)
    }

    /// Round circle, counter-clockwise, `n` vertices.
    pub fn round_circle(center: [f64; 2], radius: f64, n: usize) -> Result<Self, CurveError> {
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            })
            .collect();
        Self::from_lifted(&pts, [0, 0], "circle")
    }

    /// Straight essential circle in a primitive homology class `(p, q)`.
    /// Passes through `(0, offset)`, or `(offset, 0)` when `p == 0`.
    pub fn flat_circle(class: [i64; 2], offset: f64, n: usize) -> Result<Self, CurveError> {
        let [p, q] = class;
        if gcd(p, q) != 1 {
            return Err(CurveError::NonPrimitiveClass(class));
        }
        let base = if p == 0 { [offset, 0.0] } else { [0.0, offset] };
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                [base[0] + t * p as f64, base[1] + t * q as f64]
            })
            .collect();
        Self::from_lifted(&pts, class, "flat")
    }

    /// Stadium: two parallel segments of length `2 * half_length` along the
    /// unit direction at angle `angle`, capped by half circles of `radius`.
    /// Counter-clockwise. Straight sides are split into edges no longer than
    /// `spacing`; each cap gets `cap_vertices` interior vertices.
    pub fn stadium(
        center: [f64; 2],
        angle: f64,
        half_length: f64,
        radius: f64,
        spacing: f64,
        cap_vertices: usize,
    ) -> Result<Self, CurveError> {
        let u = [angle.cos(), angle.sin()];
        let nrm = [-u[1], u[0]];
        let at = |s: f64, side: f64| add(center, add(scale(u, s), scale(nrm, side * radius)));
        let m = ((2.0 * half_length / spacing).ceil() as usize).max(1);
        let mut pts = Vec::new();
        // lower side, left to right
        for i in 0..m {
            pts.push(at(
                -half_length + 2.0 * half_length * i as f64 / m as f64,
                -1.0,
            ));
        }
        // right cap
        let base = angle - std::f64::consts::FRAC_PI_2;
        for j in 0..=cap_vertices {
            let a = base + std::f64::consts::PI * j as f64 / (cap_vertices + 1) as f64;
            let c = add(center, scale(u, half_length));
            pts.push(add(c, [radius * a.cos(), radius * a.sin()]));
        }
        // upper side, right to left
        for i in 0..m {
            pts.push(at(
                half_length - 2.0 * half_length * i as f64 / m as f64,
                1.0,
            ));
        }
        // left cap
        let base = angle + std::f64::consts::FRAC_PI_2;
        for j in 0..=cap_vertices {
            let a = base + std::f64::consts::PI * j as f64 / (cap_vertices + 1) as f64;
            let c = sub(center, scale(u, half_length));
            pts.push(add(c, [radius * a.cos(), radius * a.sin()]));
        }
        Self::from_lifted(&pts, [0, 0], "stadium")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[TorusPoint] {
        &self.vertices
    }

    pub fn edge_lifts(&self) -> &[[i64; 2]] {
        &self.edge_lifts
    }

    pub fn vertex(&self, i: usize) -> TorusPoint {
        self.vertices[i % self.len()]
    }

    /// Lifted displacement of edge `i`.
    pub fn edge_vector(&self, i: usize) -> [f64; 2] {
        let n = self.len();
        let a = self.vertices[i];
        let b = self.vertices[(i + 1) % n];
        let l = self.edge_lifts[i];
        [b.x - a.x + l[0] as f64, b.y - a.y + l[1] as f64]
    }

    pub fn homology_class(&self) -> [i64; 2] {
        self.edge_lifts
            .iter()
            .fold([0, 0], |acc, l| [acc[0] + l[0], acc[1] + l[1]])
    }

    /// Lifted vertices starting at `vertices[0]`; `n + 1` entries, the last
    /// being `vertices[0] + class`.
    pub fn unrolled(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut p = self.vertices[0].as_array();
        out.push(p);
        for i in 0..self.len() {
            p = add(p, self.edge_vector(i));
            out.push(p);
        }
        out
    }

    pub fn length(&self) -> f64 {
        (0..self.len()).map(|i| norm(self.edge_vector(i))).sum()
    }

    /// Arc length at the start of each edge; `n + 1` entries.
    pub fn cumulative_lengths(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for i in 0..self.len() {
            acc += norm(self.edge_vector(i));
            out.push(acc);
        }
        out
    }

    pub fn max_edge_length(&self) -> f64 {
        (0..self.len())
            .map(|i| norm(self.edge_vector(i)))
            .fold(0.0, f64::max)
    }

    /// Shoelace area of the unrolled lift. Meaningful for contractible
    /// curves; positive for counter-clockwise orientation.
    pub fn enclosed_area(&self) -> f64 {
        // lifted positions rebuilt from reduced coordinates plus exact
        // integer offsets, so long curves do not accumulate drift
        let o = self.vertices[0];
        let mut shift = [0i64; 2];
        let mut acc = 0.0;
        for i in 0..self.len() {
            let v = self.vertices[i];
            let p = [v.x - o.x + shift[0] as f64, v.y - o.y + shift[1] as f64];
            acc += cross(p, self.edge_vector(i));
            shift = [
                shift[0] + self.edge_lifts[i][0],
                shift[1] + self.edge_lifts[i][1],
            ];
        }
        acc / 2.0
    }

    /// Moves every vertex by at most `delta` (uniform in a disk), seeded.
    pub fn jittered(&self, delta: f64, seed: u64) -> Result<Self, CurveError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = self.unrolled();
        let class = self.homology_class();
        pts.pop();
        for p in pts.iter_mut() {
            let r = delta * rng.random::<f64>().sqrt();
            let a = std::f64::consts::TAU * rng.random::<f64>();
            p[0] += r * a.cos();
            p[1] += r * a.sin();
        }
        let mut c = Self::from_lifted(&pts, class, self.label.clone())?;
        c.generation = self.generation;
        Ok(c)
    }

    /// Edge index and in-edge fraction for arc parameter `s` (taken modulo
    /// the total length), given precomputed cumulative lengths.
    pub fn locate(&self, cumulative: &[f64], s: f64) -> (usize, f64) {
        let total = cumulative[self.len()];
        let s = s.rem_euclid(total);
        let i = match cumulative.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(self.len() - 1),
            Err(i) => i - 1,
        };
        let len = cumulative[i + 1] - cumulative[i];
        (i, ((s - cumulative[i]) / len).clamp(0.0, 1.0))
    }

    /// Lifted position (relative to the torus representative of the edge's
    /// start vertex) of the point at arc parameter `s`.
    pub fn lifted_point_at(&self, cumulative: &[f64], s: f64) -> [f64; 2] {
        let (i, t) = self.locate(cumulative, s);
        add(self.vertices[i].as_array(), scale(self.edge_vector(i), t))
    }

    pub fn point_at(&self, cumulative: &[f64], s: f64) -> TorusPoint {
        TorusPoint::from_lift(self.lifted_point_at(cumulative, s))
    }

    /// Lifted open polyline for the arc `[s0, s1]` (with `s1 >= s0`, possibly
    /// wrapping past the end), starting near the torus representative of the
    /// point at `s0`.
    pub fn arc_points(&self, cumulative: &[f64], s0: f64, s1: f64) -> Vec<[f64; 2]> {
        let total = cumulative[self.len()];
        let start = self.lifted_point_at(cumulative, s0);
        let mut out = vec![start];
        if s1 <= s0 {
            return out;
        }
        let (mut edge, _) = self.locate(cumulative, s0);
        let base = s0 - s0.rem_euclid(total); // multiple of total before s0
        let mut edge_end = base + cumulative[edge + 1];
        let mut cur = start;
        let mut cur_s = s0;
        while edge_end < s1 {
            let d = self.edge_vector(edge);
            let len = norm(d);
            let frac = (edge_end - cur_s) / len;
            cur = add(cur, scale(d, frac));
            out.push(cur);
            cur_s = edge_end;
            edge = (edge + 1) % self.len();
            edge_end += cumulative[edge + 1] - cumulative[edge];
        }
        let d = self.edge_vector(edge);
        let frac = (s1 - cur_s) / norm(d);
        out.push(add(cur, scale(d, frac)));
        out
    }
}

/// Shoelace area of a closed lifted polygon; the closing edge is implicit.
pub fn signed_area(points: &[[f64; 2]]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let o = points[0];
    let mut acc = 0.0;
    for w in points.windows(2) {
        acc += cross(sub(w[0], o), sub(w[1], o));
    }
    acc / 2.0
}

/// Euclidean length of an open lifted polyline.
pub fn polyline_length(points: &[[f64; 2]]) -> f64 {
    points.windows(2).map(|w| norm(sub(w[1], w[0]))).sum()
}

/// Distance from point `x` to segment `q + t*d`.
#[inline]
pub(crate) fn point_segment_distance(x: [f64; 2], q: [f64; 2], d: [f64; 2]) -> f64 {
    let e = d[0] * d[0] + d[1] * d[1];
    let w = sub(x, q);
    let t = ((w[0] * d[0] + w[1] * d[1]) / e).clamp(0.0, 1.0);
    norm(sub(w, scale(d, t)))
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

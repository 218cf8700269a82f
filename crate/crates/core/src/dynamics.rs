//! Area-preserving maps of the 2-torus `R²/Z²`.
//!
//! Two families are supported: hyperbolic linear automorphisms given by an
//! integer matrix of determinant one, and compositions of coordinate shears
//! whose profiles are trigonometric polynomials. Both are exactly
//! area-preserving and have closed-form Jacobians.
//!
//! All logarithms in this crate are natural logarithms.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Values this close below 1 reduce to 0, so that `reduce` never returns 1.0.
const WRAP_EPS: f64 = 1e-15;

/// Cocycle steps discarded before the Lyapunov average starts.
pub const LYAPUNOV_BURN_IN: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("matrix {0:?} must have determinant 1, got {1}")]
    NotUnimodular([[i64; 2]; 2], i64),
    #[error("matrix {0:?} is not hyperbolic: |trace| = {1} must exceed 2")]
    NotHyperbolic([[i64; 2]; 2], i64),
    #[error("cocycle product became non-finite")]
    NonFinite,
}

/// Reduces a real number into `[0, 1)`.
#[inline]
pub fn reduce(v: f64) -> f64 {
    let r = v - v.floor();
    if r >= 1.0 - WRAP_EPS {
        0.0
    } else {
        r
    }
}

/// Signed difference `b - a` reduced into `[-0.5, 0.5)`.
#[inline]
pub fn wrap_delta(d: f64) -> f64 {
    d - (d + 0.5).floor()
}

/// A point of the torus with both coordinates in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        TorusPoint {
            x: reduce(x),
            y: reduce(y),
        }
    }

    pub fn from_lift(p: [f64; 2]) -> Self {
        Self::new(p[0], p[1])
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Shortest displacement from `self` to `other` on the torus.
    pub fn delta_to(self, other: TorusPoint) -> [f64; 2] {
        [wrap_delta(other.x - self.x), wrap_delta(other.y - self.y)]
    }

    /// Flat torus distance.
    pub fn distance(self, other: TorusPoint) -> f64 {
        let d = self.delta_to(other);
        d[0].hypot(d[1])
    }
}

impl fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Largest possible flat distance between two points of the torus.
pub const TORUS_DIAMETER: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A 2×2 integer matrix with determinant one and `|trace| > 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperbolicMatrix([[i64; 2]; 2]);

impl HyperbolicMatrix {
    pub fn new(m: [[i64; 2]; 2]) -> Result<Self, MapError> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det != 1 {
            return Err(MapError::NotUnimodular(m, det));
        }
        let tr = m[0][0] + m[1][1];
        if tr.abs() <= 2 {
            return Err(MapError::NotHyperbolic(m, tr));
        }
        Ok(HyperbolicMatrix(m))
    }

    /// The cat map `[[2,1],[1,1]]`.
    pub fn cat() -> Self {
        HyperbolicMatrix([[2, 1], [1, 1]])
    }

    pub fn entries(&self) -> [[i64; 2]; 2] {
        self.0
    }

    pub fn trace(&self) -> i64 {
        self.0[0][0] + self.0[1][1]
    }

    /// Eigenvalue of largest modulus (its absolute value).
    pub fn spectral_radius(&self) -> f64 {
        let t = self.trace().abs() as f64;
        (t + (t * t - 4.0).sqrt()) / 2.0
    }

    /// Unit eigenvectors `(unstable, stable)`.
    pub fn eigendirections(&self) -> ([f64; 2], [f64; 2]) {
        let t = self.trace() as f64;
        let disc = (t * t - 4.0).sqrt();
        let (big, small) = if t > 0.0 {
            ((t + disc) / 2.0, (t - disc) / 2.0)
        } else {
            ((t - disc) / 2.0, (t + disc) / 2.0)
        };
        (self.eigenvector(big), self.eigenvector(small))
    }

    fn eigenvector(&self, ev: f64) -> [f64; 2] {
        let [[a, b], [c, d]] = self.0.map(|r| r.map(|v| v as f64));
        // Pick the better-conditioned row of (A - ev I).
        let v = if b.abs() >= c.abs() {
            [b, ev - a]
        } else {
            [ev - d, c]
        };
        let n = v[0].hypot(v[1]);
        let v = [v[0] / n, v[1] / n];
        if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
            [-v[0], -v[1]]
        } else {
            v
        }
    }

    pub fn apply_lift(&self, p: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [
            m[0][0] as f64 * p[0] + m[0][1] as f64 * p[1],
            m[1][0] as f64 * p[0] + m[1][1] as f64 * p[1],
        ]
    }

    pub fn apply_int(&self, v: [i64; 2]) -> [i64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }
}

/// Which coordinate a shear moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShearAxis {
    /// `(x, y) -> (x + f(y), y)`
    X,
    /// `(x, y) -> (x, y + g(x))`
    Y,
}

/// One term of a shear profile. Frequency 0 is a constant (a rigid
/// translation); frequency `n > 0` contributes `amplitude * sin(2π n t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub frequency: u32,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shear {
    pub axis: ShearAxis,
    pub terms: Vec<FourierTerm>,
}

impl Shear {
    pub fn new(axis: ShearAxis, terms: Vec<FourierTerm>) -> Self {
        Shear { axis, terms }
    }

    pub fn profile(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                if term.frequency == 0 {
                    term.amplitude
                } else {
                    term.amplitude * (TAU * term.frequency as f64 * t).sin()
                }
            })
            .sum()
    }

    pub fn profile_derivative(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .filter(|term| term.frequency > 0)
            .map(|term| {
                let w = TAU * term.frequency as f64;
                term.amplitude * w * (w * t).cos()
            })
            .sum()
    }

    fn apply_lift(&self, p: [f64; 2]) -> [f64; 2] {
        match self.axis {
            ShearAxis::X => [p[0] + self.profile(p[1]), p[1]],
            ShearAxis::Y => [p[0], p[1] + self.profile(p[0])],
        }
    }

    fn jacobian(&self, p: [f64; 2]) -> Mat2 {
        match self.axis {
            ShearAxis::X => [[1.0, self.profile_derivative(p[1])], [0.0, 1.0]],
            ShearAxis::Y => [[1.0, 0.0], [self.profile_derivative(p[0]), 1.0]],
        }
    }
}

pub type Mat2 = [[f64; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn mat_vec(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// An area-preserving map of the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SurfaceMap {
    LinearHyperbolic(HyperbolicMatrix),
    /// Shears applied in list order (the first entry acts first).
    ShearComposition(Vec<Shear>),
}

impl SurfaceMap {
    pub fn cat() -> Self {
        SurfaceMap::LinearHyperbolic(HyperbolicMatrix::cat())
    }

    pub fn identity() -> Self {
        SurfaceMap::ShearComposition(vec![Shear::new(ShearAxis::X, Vec::new())])
    }

    /// `x -> x + a sin(2πy)` followed by `y -> y + b sin(2πx)`.
    pub fn sine_shears(a: f64, b: f64) -> Self {
        SurfaceMap::ShearComposition(vec![
            Shear::new(
                ShearAxis::X,
                vec![FourierTerm {
                    frequency: 1,
                    amplitude: a,
                }],
            ),
            Shear::new(
                ShearAxis::Y,
                vec![FourierTerm {
                    frequency: 1,
                    amplitude: b,
                }],
            ),
        ])
    }

    /// Applies the map on the universal cover `R²`. The lift commutes with
    /// integer translations up to the induced action on `Z²`.
    pub fn apply_lift(&self, p: [f64; 2]) -> [f64; 2] {
        match self {
            SurfaceMap::LinearHyperbolic(m) => m.apply_lift(p),
            SurfaceMap::ShearComposition(shears) => shears.iter().fold(p, |q, s| s.apply_lift(q)),
        }
    }

    /// Action on first homology / on integer translations of the lift.
    pub fn homology_action(&self, v: [i64; 2]) -> [i64; 2] {
        match self {
            SurfaceMap::LinearHyperbolic(m) => m.apply_int(v),
            SurfaceMap::ShearComposition(_) => v,
        }
    }

    pub fn apply(&self, p: TorusPoint) -> TorusPoint {
        TorusPoint::from_lift(self.apply_lift(p.as_array()))
    }

    /// `φ^n(p)`.
    pub fn iterate(&self, p: TorusPoint, n: usize) -> TorusPoint {
        (0..n).fold(p, |q, _| self.apply(q))
    }

    pub fn orbit(&self, x: TorusPoint, k: usize) -> OrbitSegment {
        let mut points = Vec::with_capacity(k + 1);
        points.push(x);
        for i in 0..k {
            let next = self.apply(points[i]);
            points.push(next);
        }
        OrbitSegment {
            start: x,
            k,
            points,
        }
    }

    pub fn jacobian(&self, p: TorusPoint) -> Mat2 {
        match self {
            SurfaceMap::LinearHyperbolic(m) => m.entries().map(|r| r.map(|v| v as f64)),
            SurfaceMap::ShearComposition(shears) => {
                let mut q = p.as_array();
                let mut acc: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
                for s in shears {
                    acc = mat_mul(&s.jacobian(q), &acc);
                    q = s.apply_lift(q);
                }
                acc
            }
        }
    }

    /// Top Lyapunov exponent along the orbit of `x`, averaged over `k`
    /// cocycle steps after a burn-in of [`LYAPUNOV_BURN_IN`] steps. The
    /// tangent vector is renormalized every step.
    pub fn lyapunov_top(&self, x: TorusPoint, k: usize) -> Result<f64, MapError> {
        assert!(k >= 1, "lyapunov_top needs k >= 1");
        let mut p = x;
        let n = 1f64.hypot(0.3819660112501051);
        let mut v = [1.0 / n, 0.3819660112501051 / n];
        let mut sum = 0.0;
        for step in 0..LYAPUNOV_BURN_IN + k {
            let w = mat_vec(&self.jacobian(p), v);
            let norm = w[0].hypot(w[1]);
            if !norm.is_finite() || norm == 0.0 {
                return Err(MapError::NonFinite);
            }
            if step >= LYAPUNOV_BURN_IN {
                sum += norm.ln();
            }
            v = [w[0] / norm, w[1] / norm];
            p = self.apply(p);
        }
        Ok(sum / k as f64)
    }

    /// `log` of the spectral radius for linear maps; `None` when no closed
    /// form is available.
    pub fn reference_topological_entropy(&self) -> Option<f64> {
        match self {
            SurfaceMap::LinearHyperbolic(m) => Some(m.spectral_radius().ln()),
            SurfaceMap::ShearComposition(_) => None,
        }
    }

    /// Largest singular value of the Jacobian for linear maps.
    pub fn max_stretch(&self) -> Option<f64> {
        match self {
            SurfaceMap::LinearHyperbolic(m) => {
                let a = m.entries().map(|r| r.map(|v| v as f64));
                let fro2 = a.iter().flatten().map(|v| v * v).sum::<f64>();
                let d = det(&a);
                let s2 = (fro2 + (fro2 * fro2 - 4.0 * d * d).sqrt()) / 2.0;
                Some(s2.sqrt())
            }
            SurfaceMap::ShearComposition(_) => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            SurfaceMap::LinearHyperbolic(_) => false,
            SurfaceMap::ShearComposition(s) => s
                .iter()
                .all(|sh| sh.terms.iter().all(|t| t.amplitude == 0.0)),
        }
    }
}

/// `O_k(x) = {x, φ(x), ..., φ^k(x)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment {
    pub start: TorusPoint,
    pub k: usize,
    pub points: Vec<TorusPoint>,
}

impl OrbitSegment {
    pub fn end(&self) -> TorusPoint {
        self.points[self.k]
    }
}

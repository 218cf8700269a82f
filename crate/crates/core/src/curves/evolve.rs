use rayon::prelude::*;

use super::{add, lift_between, norm, scale, sub, ClosedCurve, CurveError};
use crate::dynamics::{SurfaceMap, TorusPoint};

pub const DEFAULT_VERTEX_BUDGET: usize = 1 << 24;

/// Refinement controls for curve evolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Largest allowed distance between an image edge's midpoint and the
    /// image of the source edge's midpoint.
    pub max_sag: f64,
    /// Largest allowed lifted length of an image edge.
    pub max_edge: f64,
    pub vertex_budget: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            max_sag: 1e-4,
            max_edge: 0.05,
            vertex_budget: DEFAULT_VERTEX_BUDGET,
        }
    }
}

impl EvolveOptions {
    pub fn with_sag(max_sag: f64) -> Self {
        EvolveOptions {
            max_sag,
            ..Default::default()
        }
    }
}

const MAX_DEPTH: u32 = 48;

/// Images of the interior subdivision points of the lifted segment
/// `a + t*d`, in increasing `t`. `fa`/`fb` are the images of the endpoints.
fn refine_segment(
    map: &SurfaceMap,
    a: [f64; 2],
    d: [f64; 2],
    fa: [f64; 2],
    fb: [f64; 2],
    opts: &EvolveOptions,
    out: &mut Vec<[f64; 2]>,
) {
    fn rec(
        map: &SurfaceMap,
        a: [f64; 2],
        d: [f64; 2],
        (t0, f0): (f64, [f64; 2]),
        (t1, f1): (f64, [f64; 2]),
        opts: &EvolveOptions,
        depth: u32,
        out: &mut Vec<[f64; 2]>,
    ) {
        let tm = 0.5 * (t0 + t1);
        let fm = map.apply_lift(add(a, scale(d, tm)));
        let chord_mid = scale(add(f0, f1), 0.5);
        let sag = norm(sub(fm, chord_mid));
        let long = norm(sub(f1, f0)) > opts.max_edge;
        if depth < MAX_DEPTH && (sag >= opts.max_sag || long) {
            rec(map, a, d, (t0, f0), (tm, fm), opts, depth + 1, out);
            out.push(fm);
            rec(map, a, d, (tm, fm), (t1, f1), opts, depth + 1, out);
        }
    }
    rec(map, a, d, (0.0, fa), (1.0, fb), opts, 0, out);
}

/// Image `φ(L)` with adaptive midpoint refinement.
pub fn evolve_step(
    curve: &ClosedCurve,
    map: &SurfaceMap,
    opts: &EvolveOptions,
) -> Result<ClosedCurve, CurveError> {
    let n = curve.len();
    let images: Vec<TorusPoint> = curve.vertices().par_iter().map(|&p| map.apply(p)).collect();
    // Per source edge: lifted image points, starting at the image of the
    // edge's start vertex and ending at the image of its end vertex.
    let pieces: Vec<Vec<[f64; 2]>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = curve.vertex(i).as_array();
            let d = curve.edge_vector(i);
            let fa = map.apply_lift(a);
            let fb = map.apply_lift(add(a, d));
            let mut pts = vec![fa];
            refine_segment(map, a, d, fa, fb, opts, &mut pts);
            pts.push(fb);
            pts
        })
        .collect();
    let total: usize = pieces.iter().map(|p| p.len() - 1).sum();
    if total > opts.vertex_budget {
        return Err(CurveError::VertexBudgetExceeded {
            limit: opts.vertex_budget,
            completed: 0,
        });
    }
    let mut vertices = Vec::with_capacity(total);
    let mut lifts = Vec::with_capacity(total);
    for (i, pts) in pieces.iter().enumerate() {
        let m = pts.len() - 1;
        let mut prev = images[i];
        vertices.push(prev);
        for j in 0..m {
            let next = if j + 1 == m {
                images[(i + 1) % n]
            } else {
                TorusPoint::from_lift(pts[j + 1])
            };
            lifts.push(lift_between(prev, next, sub(pts[j + 1], pts[j])));
            if j + 1 < m {
                vertices.push(next);
            }
            prev = next;
        }
    }
    let mut out = ClosedCurve::new(vertices, lifts, curve.label.clone())?;
    out.generation = curve.generation + 1;
    Ok(out)
}

/// `[L_1, ..., L_steps]`.
pub fn evolve(
    curve: &ClosedCurve,
    map: &SurfaceMap,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<Vec<ClosedCurve>, CurveError> {
    assert!(opts.max_sag > 0.0 && steps >= 1);
    let mut out: Vec<ClosedCurve> = Vec::with_capacity(steps);
    for k in 0..steps {
        let src = out.last().unwrap_or(curve);
        match evolve_step(src, map, opts) {
            Ok(c) => out.push(c),
            Err(CurveError::VertexBudgetExceeded { limit, .. }) => {
                return Err(CurveError::VertexBudgetExceeded {
                    limit,
                    completed: k,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Pushes an open lifted polyline forward `steps` times with the same
/// refinement rule; returns the final lifted polyline.
pub fn evolve_open_arc(
    points: &[[f64; 2]],
    map: &SurfaceMap,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<Vec<[f64; 2]>, CurveError> {
    let mut cur = points.to_vec();
    for done in 0..steps {
        if cur.is_empty() {
            break;
        }
        // Translate by an integer vector to keep coordinates small; the
        // lift is equivariant under integer translations.
        let shift = [cur[0][0].floor(), cur[0][1].floor()];
        for p in cur.iter_mut() {
            *p = sub(*p, shift);
        }
        let imgs: Vec<[f64; 2]> = cur.iter().map(|&p| map.apply_lift(p)).collect();
        let mut next = Vec::with_capacity(cur.len());
        next.push(imgs[0]);
        for j in 0..cur.len() - 1 {
            let d = sub(cur[j + 1], cur[j]);
            refine_segment(map, cur[j], d, imgs[j], imgs[j + 1], opts, &mut next);
            next.push(imgs[j + 1]);
        }
        if next.len() > opts.vertex_budget {
            return Err(CurveError::VertexBudgetExceeded {
                limit: opts.vertex_budget,
                completed: done,
            });
        }
        cur = next;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::polyline_length;
    use crate::dynamics::{FourierTerm, Shear, ShearAxis};

    #[test]
    fn identity_evolution_returns_copies() {
        let c = ClosedCurve::round_circle([0.4, 0.6], 0.1, 40).unwrap();
        let out = evolve(&c, &SurfaceMap::identity(), 3, &EvolveOptions::default()).unwrap();
        assert_eq!(out.len(), 3);
        for (k, l) in out.iter().enumerate() {
            assert_eq!(l.vertices(), c.vertices());
            assert_eq!(l.edge_lifts(), c.edge_lifts());
            assert_eq!(l.generation, k + 1);
        }
    }

    #[test]
    fn cat_map_acts_on_homology() {
        let c = ClosedCurve::flat_circle([1, 0], 0.3, 32).unwrap();
        let out = evolve(&c, &SurfaceMap::cat(), 2, &EvolveOptions::default()).unwrap();
        assert_eq!(out[0].homology_class(), [2, 1]);
        assert_eq!(out[1].homology_class(), [5, 3]);
        assert!((out[0].length() - 5f64.sqrt()).abs() < 1e-9);
    }

    /// Dense sampling oracle: the image of a polyline under a linear map is
    /// a polyline, so its length is the sum over source edges of |A d|,
    /// accumulated here over a million sample points.
    #[test]
    fn cat_image_of_circle_length_matches_dense_sampling() {
        let c = ClosedCurve::round_circle([0.5, 0.5], 0.05, 200).unwrap();
        let l1 = &evolve(&c, &SurfaceMap::cat(), 1, &EvolveOptions::default()).unwrap()[0];
        let cum = c.cumulative_lengths();
        let total = cum[c.len()];
        let samples = 1_000_000;
        let pts: Vec<[f64; 2]> = (0..=samples)
            .map(|j| {
                let p = c.lifted_point_at(&cum, total * j as f64 / samples as f64);
                [2.0 * p[0] + p[1], p[0] + p[1]]
            })
            .collect();
        // the sample list starts and ends at the same point of the lift
        let dense = polyline_length(&pts);
        assert!(
            (l1.length() - dense).abs() / dense < 1e-6,
            "{} vs {dense}",
            l1.length()
        );
        let lam = (3.0 + 5f64.sqrt()) / 2.0;
        let lmin = 1.0 / lam;
        assert!(l1.length() <= lam * c.length() && l1.length() >= lmin * c.length());
    }

    #[test]
    fn refinement_respects_sag_and_edge_cap() {
        let map = SurfaceMap::ShearComposition(vec![Shear::new(
            ShearAxis::X,
            vec![FourierTerm {
                frequency: 1,
                amplitude: 0.2,
            }],
        )]);
        let c = ClosedCurve::flat_circle([0, 1], 0.5, 8).unwrap();
        let opts = EvolveOptions {
            max_sag: 1e-5,
            max_edge: 0.02,
            ..Default::default()
        };
        let l1 = evolve_step(&c, &map, &opts).unwrap();
        assert!(l1.max_edge_length() <= 0.02 + 1e-12);
        assert_eq!(l1.homology_class(), [0, 1]);
        let mut pts = l1.unrolled();
        for w in pts.windows(2) {
            let mid = scale(add(w[0], w[1]), 0.5);
            // true curve: x = 0.5 + 0.2 sin(2πy)
            let want = 0.5 + 0.2 * (std::f64::consts::TAU * mid[1]).sin();
            assert!((mid[0] - want).abs() < 1e-4);
        }
        pts.clear();
    }

    #[test]
    fn budget_is_enforced() {
        let c = ClosedCurve::round_circle([0.5, 0.5], 0.1, 16).unwrap();
        let opts = EvolveOptions {
            vertex_budget: 2000,
            ..Default::default()
        };
        match evolve(&c, &SurfaceMap::cat(), 10, &opts) {
            Err(CurveError::VertexBudgetExceeded { limit, completed }) => {
                assert_eq!(limit, 2000);
                assert!(completed >= 1 && completed < 10);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn open_arc_matches_closed_evolution_for_linear_map() {
        let c = ClosedCurve::round_circle([0.5, 0.5], 0.05, 64).unwrap();
        let cum = c.cumulative_lengths();
        let total = cum[c.len()];
        let arc = c.arc_points(&cum, 0.0, total);
        let img = evolve_open_arc(&arc, &SurfaceMap::cat(), 4, &EvolveOptions::default()).unwrap();
        let closed = evolve(&c, &SurfaceMap::cat(), 4, &EvolveOptions::default()).unwrap();
        assert!((polyline_length(&img) - closed[3].length()).abs() < 1e-9);
    }
}

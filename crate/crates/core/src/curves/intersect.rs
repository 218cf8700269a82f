use rayon::prelude::*;

use super::{add, cross, norm, scale, sub, ClosedCurve, CurveError, SegmentGrid};
use crate::dynamics::TorusPoint;

/// Crossings with `|sin(angle)|` below this are rejected as tangential.
pub const TANGENCY_TOLERANCE: f64 = 1e-8;

/// A transverse crossing of curve A with curve B.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntersectionPoint {
    pub position: TorusPoint,
    /// Sign of `cross(tangent_A, tangent_B)`.
    pub sign: i8,
    pub arc_param_a: f64,
    pub arc_param_b: f64,
    pub edge_a: usize,
    pub t_a: f64,
    pub edge_b: usize,
    pub t_b: f64,
}

/// All crossings of `a` with `b` on the torus, ordered along `a`.
/// Each edge parameter is taken half-open (`[0, 1)`), so a crossing at a
/// shared vertex is reported once.
pub fn intersections(
    a: &ClosedCurve,
    b: &ClosedCurve,
) -> Result<Vec<IntersectionPoint>, CurveError> {
    let grid = SegmentGrid::for_curve(b, 0.0, 1.0 / 64.0);
    let cum_a = a.cumulative_lengths();
    let cum_b = b.cumulative_lengths();
    let per_edge: Vec<Result<Vec<IntersectionPoint>, CurveError>> = (0..a.len())
        .into_par_iter()
        .map_init(Vec::new, |ids, i| {
            let p = a.vertex(i).as_array();
            let dp = a.edge_vector(i);
            let lo = [p[0].min(p[0] + dp[0]), p[1].min(p[1] + dp[1])];
            let hi = [p[0].max(p[0] + dp[0]), p[1].max(p[1] + dp[1])];
            grid.query(lo, hi, ids);
            let mut found = Vec::new();
            for &j in ids.iter() {
                let j = j as usize;
                let q0 = b.vertex(j).as_array();
                let dq = b.edge_vector(j);
                for tx in -1..=1 {
                    for ty in -1..=1 {
                        let q = [q0[0] + tx as f64, q0[1] + ty as f64];
                        if let Some((s, t, sign)) =
                            segment_crossing(p, dp, q, dq).map_err(|_| {
                                CurveError::DegenerateIntersection {
                                    edge_a: i,
                                    edge_b: j,
                                }
                            })?
                        {
                            found.push(IntersectionPoint {
                                position: TorusPoint::from_lift(add(p, scale(dp, s))),
                                sign,
                                arc_param_a: cum_a[i] + s * (cum_a[i + 1] - cum_a[i]),
                                arc_param_b: cum_b[j] + t * (cum_b[j + 1] - cum_b[j]),
                                edge_a: i,
                                t_a: s,
                                edge_b: j,
                                t_b: t,
                            });
                        }
                    }
                }
            }
            found.sort_by(|x, y| x.t_a.partial_cmp(&y.t_a).unwrap());
            Ok(found)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_edge {
        out.extend(r?);
    }
    Ok(out)
}

struct Tangential;

/// Crossing parameters of `p + s*dp` and `q + t*dq`, both half-open.
fn segment_crossing(
    p: [f64; 2],
    dp: [f64; 2],
    q: [f64; 2],
    dq: [f64; 2],
) -> Result<Option<(f64, f64, i8)>, Tangential> {
    let denom = cross(dp, dq);
    let scale_ = norm(dp) * norm(dq);
    let r = sub(q, p);
    if denom.abs() <= TANGENCY_TOLERANCE * scale_ {
        // (near-)parallel: only a problem if the segments actually touch
        if cross(r, dp).abs() <= TANGENCY_TOLERANCE * norm(dp) * norm(dp).max(norm(r)) {
            let len2 = dp[0] * dp[0] + dp[1] * dp[1];
            let t0 = (r[0] * dp[0] + r[1] * dp[1]) / len2;
            let e = add(r, dq);
            let t1 = (e[0] * dp[0] + e[1] * dp[1]) / len2;
            if t0.max(t1) >= 0.0 && t0.min(t1) <= 1.0 {
                return Err(Tangential);
            }
        }
        return Ok(None);
    }
    let s = cross(r, dq) / denom;
    let t = cross(r, dp) / denom;
    if (0.0..1.0).contains(&s) && (0.0..1.0).contains(&t) {
        Ok(Some((s, t, if denom > 0.0 { 1 } else { -1 })))
    } else {
        Ok(None)
    }
}

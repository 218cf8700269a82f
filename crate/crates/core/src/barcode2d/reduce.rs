//! Action-filtered bigon reduction of a transverse pair of curves.
//!
//! Intersection points are generators. Two generators that are adjacent
//! along both curves (among the generators still alive) and whose connecting
//! arcs close up in the universal cover bound a bigon; its area is the
//! action gap of the pair. Bigons are cancelled smallest area first; every
//! cancellation emits a finite bar, every survivor an infinite bar.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Bar, Barcode, BarcodeError, Bigon};
use crate::curves::{ClosedCurve, IntersectionPoint};

/// Lifted endpoints are considered equal below this distance.
const CLOSURE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionOrder {
    SmallestFirst,
    LargestFirst,
}

/// Unrolled lift of one curve with running area integrals
/// `∫ (x dy - y dx) / 2` from the base vertex.
struct Frame {
    pts: Vec<[f64; 2]>,
    prefix: Vec<f64>,
    class: [f64; 2],
}

impl Frame {
    fn new(c: &ClosedCurve) -> Self {
        let pts = c.unrolled();
        let mut prefix = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        prefix.push(0.0);
        for w in pts.windows(2) {
            acc += 0.5 * cross(w[0], w[1]);
            prefix.push(acc);
        }
        let h = c.homology_class();
        Frame {
            pts,
            prefix,
            class: [h[0] as f64, h[1] as f64],
        }
    }

    fn total(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    /// Position in the frame and area integral from the base vertex.
    fn locate(&self, edge: usize, t: f64) -> ([f64; 2], f64) {
        let p = self.pts[edge];
        let q = self.pts[edge + 1];
        let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
        (x, self.prefix[edge] + 0.5 * cross(p, x))
    }
}

#[inline]
fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[derive(Clone, Copy)]
struct Generator {
    xa: [f64; 2],
    ia: f64,
    xb: [f64; 2],
    ib: f64,
    rank_a: usize,
    rank_b: usize,
    sign: i8,
    param_a: f64,
}

/// An arc between two generators: displacement and area integral.
#[derive(Clone, Copy, Debug)]
struct Arc {
    delta: [f64; 2],
    integral: f64,
    forward: bool,
}

fn forward_arc(f: &Frame, from: (usize, [f64; 2], f64), to: (usize, [f64; 2], f64)) -> Arc {
    let (rf, xf, if_) = from;
    let (rt, xt, it) = to;
    if rt > rf {
        Arc {
            delta: [xt[0] - xf[0], xt[1] - xf[1]],
            integral: it - if_,
            forward: true,
        }
    } else {
        let base = f.pts[0];
        let shifted = it + 0.5 * cross(f.class, [xt[0] - base[0], xt[1] - base[1]]);
        Arc {
            delta: [xt[0] + f.class[0] - xf[0], xt[1] + f.class[1] - xf[1]],
            integral: f.total() - if_ + shifted,
            forward: true,
        }
    }
}

fn reversed(a: Arc) -> Arc {
    Arc {
        delta: [-a.delta[0], -a.delta[1]],
        integral: -a.integral,
        forward: false,
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    key: f64,
    param: f64,
    x: usize,
    y: usize,
    area: f64,
}

impl PartialEq for Candidate {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Candidate {
    // reversed: BinaryHeap pops the smallest key, ties by arc parameter
    fn cmp(&self, o: &Self) -> Ordering {
        o.key
            .total_cmp(&self.key)
            .then(o.param.total_cmp(&self.param))
            .then(o.x.cmp(&self.x))
    }
}

pub(super) struct Reducer<'a> {
    fa: Frame,
    fb: Frame,
    gens: Vec<Generator>,
    xs: &'a [IntersectionPoint],
    next_a: Vec<usize>,
    prev_a: Vec<usize>,
    next_b: Vec<usize>,
    prev_b: Vec<usize>,
    alive: Vec<bool>,
    remaining: usize,
}

impl<'a> Reducer<'a> {
    pub(super) fn new(
        a: &ClosedCurve,
        b: &ClosedCurve,
        xs: &'a [IntersectionPoint],
    ) -> Result<Self, BarcodeError> {
        let n = xs.len();
        for (i, x) in xs.iter().enumerate() {
            if x.edge_a >= a.len()
                || x.edge_b >= b.len()
                || !(0.0..=1.0).contains(&x.t_a)
                || !(0.0..=1.0).contains(&x.t_b)
            {
                return Err(BarcodeError::InconsistentIntersectionData(format!(
                    "intersection {i} references edge ({}, {}) outside the curves",
                    x.edge_a, x.edge_b
                )));
            }
            if x.sign != 1 && x.sign != -1 {
                return Err(BarcodeError::InconsistentIntersectionData(format!(
                    "intersection {i} has sign {}",
                    x.sign
                )));
            }
            let pa = a.vertex(x.edge_a).as_array();
            let da = a.edge_vector(x.edge_a);
            let p = crate::dynamics::TorusPoint::from_lift([
                pa[0] + x.t_a * da[0],
                pa[1] + x.t_a * da[1],
            ]);
            let pb = b.vertex(x.edge_b).as_array();
            let db = b.edge_vector(x.edge_b);
            let q = crate::dynamics::TorusPoint::from_lift([
                pb[0] + x.t_b * db[0],
                pb[1] + x.t_b * db[1],
            ]);
            if p.distance(q) > 1e-7 {
                return Err(BarcodeError::InconsistentIntersectionData(format!(
                    "intersection {i} is not on both curves ({p} vs {q})"
                )));
            }
        }
        let fa = Frame::new(a);
        let fb = Frame::new(b);
        let mut order_a: Vec<usize> = (0..n).collect();
        order_a.sort_by(|&i, &j| {
            (xs[i].edge_a, xs[i].t_a)
                .partial_cmp(&(xs[j].edge_a, xs[j].t_a))
                .unwrap()
        });
        let mut order_b: Vec<usize> = (0..n).collect();
        order_b.sort_by(|&i, &j| {
            (xs[i].edge_b, xs[i].t_b)
                .partial_cmp(&(xs[j].edge_b, xs[j].t_b))
                .unwrap()
        });
        let mut gens: Vec<Generator> = xs
            .iter()
            .map(|x| {
                let (xa, ia) = fa.locate(x.edge_a, x.t_a);
                let (xb, ib) = fb.locate(x.edge_b, x.t_b);
                Generator {
                    xa,
                    ia,
                    xb,
                    ib,
                    rank_a: 0,
                    rank_b: 0,
                    sign: x.sign,
                    param_a: x.arc_param_a,
                }
            })
            .collect();
        let (mut next_a, mut prev_a) = (vec![0; n], vec![0; n]);
        let (mut next_b, mut prev_b) = (vec![0; n], vec![0; n]);
        for r in 0..n {
            gens[order_a[r]].rank_a = r;
            gens[order_b[r]].rank_b = r;
            next_a[order_a[r]] = order_a[(r + 1) % n];
            prev_a[order_a[(r + 1) % n]] = order_a[r];
            next_b[order_b[r]] = order_b[(r + 1) % n];
            prev_b[order_b[(r + 1) % n]] = order_b[r];
        }
        Ok(Reducer {
            fa,
            fb,
            gens,
            xs,
            next_a,
            prev_a,
            next_b,
            prev_b,
            alive: vec![true; n],
            remaining: n,
        })
    }

    fn a_end(&self, i: usize) -> (usize, [f64; 2], f64) {
        let g = &self.gens[i];
        (g.rank_a, g.xa, g.ia)
    }

    fn b_end(&self, i: usize) -> (usize, [f64; 2], f64) {
        let g = &self.gens[i];
        (g.rank_b, g.xb, g.ib)
    }

    /// Integer translation taking the B-frame lift of generator `i` to its
    /// A-frame lift.
    fn frame_shift(&self, i: usize) -> [f64; 2] {
        let g = &self.gens[i];
        [(g.xa[0] - g.xb[0]).round(), (g.xa[1] - g.xb[1]).round()]
    }

    /// Filtration value; differences of actions across a bigon equal its
    /// signed area.
    fn action(&self, i: usize) -> f64 {
        let g = &self.gens[i];
        let v = self.frame_shift(i);
        g.ia - g.ib - 0.5 * cross(v, g.xb)
    }

    /// Smallest bigon with corners `x` and `next_a(x)`, if any.
    fn evaluate(&self, x: usize) -> Option<(Candidate, Arc, Arc)> {
        let y = self.next_a[x];
        if x == y || !self.alive[x] || !self.alive[y] || self.gens[x].sign == self.gens[y].sign {
            return None;
        }
        let mut a_arcs = vec![forward_arc(&self.fa, self.a_end(x), self.a_end(y))];
        if self.prev_a[x] == y {
            a_arcs.push(reversed(forward_arc(
                &self.fa,
                self.a_end(y),
                self.a_end(x),
            )));
        }
        let mut b_arcs = Vec::with_capacity(2);
        if self.next_b[x] == y {
            b_arcs.push(forward_arc(&self.fb, self.b_end(x), self.b_end(y)));
        }
        if self.prev_b[x] == y {
            b_arcs.push(reversed(forward_arc(
                &self.fb,
                self.b_end(y),
                self.b_end(x),
            )));
        }
        let v = self.frame_shift(x);
        let mut best: Option<(Candidate, Arc, Arc)> = None;
        for aa in &a_arcs {
            for bb in &b_arcs {
                let gap = (aa.delta[0] - bb.delta[0]).hypot(aa.delta[1] - bb.delta[1]);
                if gap > CLOSURE_TOL {
                    continue;
                }
                let area = aa.integral - (bb.integral + 0.5 * cross(v, bb.delta));
                let better = best
                    .as_ref()
                    .is_none_or(|(c, _, _)| area.abs() < c.area.abs());
                if better {
                    best = Some((
                        Candidate {
                            key: area.abs(),
                            param: self.gens[x].param_a,
                            x,
                            y,
                            area,
                        },
                        *aa,
                        *bb,
                    ));
                }
            }
        }
        best
    }

    fn unlink(&mut self, i: usize) {
        let (p, n) = (self.prev_a[i], self.next_a[i]);
        self.next_a[p] = n;
        self.prev_a[n] = p;
        let (p, n) = (self.prev_b[i], self.next_b[i]);
        self.next_b[p] = n;
        self.prev_b[n] = p;
        self.alive[i] = false;
        self.remaining -= 1;
    }

    fn bigon_from(&self, c: &Candidate, aa: &Arc, bb: &Arc) -> Bigon {
        let (px, py) = (self.xs[c.x], self.xs[c.y]);
        Bigon {
            corners: (px, py),
            arc_a: (px.arc_param_a, py.arc_param_a, aa.forward),
            arc_b: (px.arc_param_b, py.arc_param_b, bb.forward),
            area: c.area.abs(),
        }
    }

    pub(super) fn smallest_bigon(&self) -> Option<Bigon> {
        (0..self.gens.len())
            .filter_map(|x| self.evaluate(x))
            .min_by(|a, b| b.0.cmp(&a.0))
            .map(|(c, aa, bb)| self.bigon_from(&c, &aa, &bb))
    }

    pub(super) fn run(mut self, order: ReductionOrder) -> Result<Vec<Bar>, BarcodeError> {
        let n = self.gens.len();
        let keyed = |mut c: Candidate| {
            if order == ReductionOrder::LargestFirst {
                c.key = -c.key;
            }
            c
        };
        let mut heap: BinaryHeap<Candidate> = (0..n)
            .filter_map(|x| self.evaluate(x))
            .map(|c| keyed(c.0))
            .collect();
        let mut bars = Vec::with_capacity(n);
        let mut iterations = 0usize;
        while let Some(top) = heap.pop() {
            let (x, y) = (top.x, top.y);
            if !self.alive[x] || !self.alive[y] || self.next_a[x] != y {
                continue;
            }
            let Some((fresh, _, _)) = self.evaluate(x) else {
                continue;
            };
            let fresh = keyed(fresh);
            if fresh.key.to_bits() != top.key.to_bits() {
                heap.push(fresh);
                continue;
            }
            iterations += 1;
            if iterations > n {
                return Err(BarcodeError::NonTerminating(iterations));
            }
            let (ax, ay) = (self.action(x), self.action(y));
            bars.push(Bar {
                birth: ax.min(ay),
                length: fresh.area.abs(),
            });
            let before_a = self.prev_a[x];
            // x and y are B-adjacent in one of the two directions
            let (b_lo, b_hi) = if self.next_b[x] == y {
                (self.prev_b[x], self.next_b[y])
            } else {
                (self.prev_b[y], self.next_b[x])
            };
            self.unlink(x);
            self.unlink(y);
            if self.remaining >= 2 {
                if self.alive[before_a] {
                    if let Some(c) = self.evaluate(before_a) {
                        heap.push(keyed(c.0));
                    }
                }
                if self.alive[b_lo] && self.alive[b_hi] && b_lo != b_hi {
                    for s in [b_lo, b_hi] {
                        if let Some(c) = self.evaluate(s) {
                            heap.push(keyed(c.0));
                        }
                    }
                }
            }
        }
        for i in 0..n {
            if self.alive[i] {
                bars.push(Bar {
                    birth: self.action(i),
                    length: f64::INFINITY,
                });
            }
        }
        Ok(bars)
    }
}

pub(super) fn reduce(
    a: &ClosedCurve,
    b: &ClosedCurve,
    xs: &[IntersectionPoint],
    order: ReductionOrder,
) -> Result<Barcode, BarcodeError> {
    let bars = Reducer::new(a, b, xs)?.run(order)?;
    Ok(Barcode {
        bars,
        labels: (a.label.clone(), b.label.clone()),
        k: a.generation,
    })
}

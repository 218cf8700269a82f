use super::ClosedCurve;

/// Uniform bucket grid over the unit torus holding segment ids. A segment
/// is registered in every cell its (padded, wrapped) bounding box touches.
#[derive(Clone, Debug)]
pub struct SegmentGrid {
    cells: usize,
    buckets: Vec<Vec<u32>>,
}

impl SegmentGrid {
    /// Indexes the edges of `curve`. Cells are at least `min_cell` wide.
    pub fn for_curve(curve: &ClosedCurve, pad: f64, min_cell: f64) -> Self {
        let cell = min_cell.max(curve.max_edge_length()).max(1.0 / 512.0);
        let cells = ((1.0 / cell).floor() as usize).clamp(1, 512);
        let mut grid = SegmentGrid {
            cells,
            buckets: vec![Vec::new(); cells * cells],
        };
        let mut touched = Vec::new();
        for i in 0..curve.len() {
            let p = curve.vertex(i).as_array();
            let d = curve.edge_vector(i);
            let lo = [p[0].min(p[0] + d[0]) - pad, p[1].min(p[1] + d[1]) - pad];
            let hi = [p[0].max(p[0] + d[0]) + pad, p[1].max(p[1] + d[1]) + pad];
            touched.clear();
            grid.for_each_cell(lo, hi, |c| touched.push(c));
            for &c in &touched {
                if grid.buckets[c].last() != Some(&(i as u32)) {
                    grid.buckets[c].push(i as u32);
                }
            }
        }
        grid
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    fn cell_range(&self, lo: f64, hi: f64) -> (i64, i64) {
        let g = self.cells as f64;
        let a = (lo * g).floor() as i64;
        let mut b = (hi * g).floor() as i64;
        if b - a >= self.cells as i64 {
            b = a + self.cells as i64 - 1;
        }
        (a, b)
    }

    fn for_each_cell(&self, lo: [f64; 2], hi: [f64; 2], mut f: impl FnMut(usize)) {
        let g = self.cells as i64;
        let (x0, x1) = self.cell_range(lo[0], hi[0]);
        let (y0, y1) = self.cell_range(lo[1], hi[1]);
        for cx in x0..=x1 {
            for cy in y0..=y1 {
                f((cx.rem_euclid(g) * g + cy.rem_euclid(g)) as usize);
            }
        }
    }

    /// Sorted, deduplicated ids of segments whose cells meet the box.
    pub fn query(&self, lo: [f64; 2], hi: [f64; 2], out: &mut Vec<u32>) {
        out.clear();
        self.for_each_cell(lo, hi, |c| out.extend_from_slice(&self.buckets[c]));
        out.sort_unstable();
        out.dedup();
    }
}

use std::io::{BufRead, Write};

use super::{ClosedCurve, CurveError};
use crate::dynamics::TorusPoint;

/// Writes `x,y,dlift_x,dlift_y` rows (with header), one per vertex/edge.
pub fn write_curve_csv<W: Write>(curve: &ClosedCurve, mut w: W) -> Result<(), CurveError> {
    writeln!(w, "x,y,dlift_x,dlift_y")?;
    for (p, l) in curve.vertices().iter().zip(curve.edge_lifts()) {
        writeln!(w, "{},{},{},{}", p.x, p.y, l[0], l[1])?;
    }
    Ok(())
}

pub fn read_curve_csv<R: BufRead>(r: R, label: &str) -> Result<ClosedCurve, CurveError> {
    let mut vertices = Vec::new();
    let mut lifts = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (lineno == 0 && line.starts_with('x')) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(CurveError::Csv(format!(
                "line {}: expected 4 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let bad = |f: &str| CurveError::Csv(format!("line {}: bad number {f:?}", lineno + 1));
        let x: f64 = fields[0].parse().map_err(|_| bad(fields[0]))?;
        let y: f64 = fields[1].parse().map_err(|_| bad(fields[1]))?;
        let lx: i64 = fields[2].parse().map_err(|_| bad(fields[2]))?;
        let ly: i64 = fields[3].parse().map_err(|_| bad(fields[3]))?;
        vertices.push(TorusPoint::new(x, y));
        lifts.push([lx, ly]);
    }
    ClosedCurve::new(vertices, lifts, label)
}

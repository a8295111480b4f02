//! Pointy-top hexagonal binning.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HexBin {
    pub cx: f64,
    pub cy: f64,
    pub count: usize,
}

/// Rounds fractional axial coordinates to the nearest hex via cube coordinates.
fn axial_round(q: f64, r: f64) -> (i64, i64) {
    let s = -q - r;
    let (mut rq, mut rr, rs) = (q.round(), r.round(), s.round());
    let (dq, dr, ds) = ((rq - q).abs(), (rr - r).abs(), (rs - s).abs());
    if dq > dr && dq > ds {
        rq = -rr - rs;
    } else if dr > ds {
        rr = -rq - rs;
    }
    (rq as i64, rr as i64)
}

/// Bins points on a pointy-top lattice whose hexagons are `width` wide (centre spacing along
/// a row). Bins come back ordered by row, then column.
pub fn hexbin(points: &[(f64, f64)], width: f64) -> Vec<HexBin> {
    let size = width / 3f64.sqrt();
    let mut cells: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for &(x, y) in points {
        let q = (3f64.sqrt() / 3.0 * x - y / 3.0) / size;
        let r = (2.0 / 3.0 * y) / size;
        let (q, r) = axial_round(q, r);
        *cells.entry((r, q)).or_default() += 1;
    }
    cells
        .into_iter()
        .map(|((r, q), count)| HexBin {
            cx: size * 3f64.sqrt() * (q as f64 + r as f64 / 2.0),
            cy: size * 1.5 * r as f64,
            count,
        })
        .collect()
}

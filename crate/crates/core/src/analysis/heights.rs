use log::warn;

use crate::analysis::{minimax_elevation, ElevationTable};
use crate::chain::FiniteLandscape;
use crate::error::Result;
use crate::transform::TransformSpec;

/// Classical, modified and clipped critical heights of one landscape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalHeights {
    pub h0: f64,
    pub hf: f64,
    pub c_star: f64,
}

fn max_over_pairs(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for x in 0..n {
        for y in x..n {
            best = best.max(f(x, y));
        }
    }
    best.max(0.0)
}

/// `H⁰ = max_{x,y} G⁰(x,y) − H(x) − H(y) + min H`.
pub fn critical_height_classical(land: &FiniteLandscape, table: &ElevationTable) -> f64 {
    let e = land.energies();
    let h_min = land.h_min();
    max_over_pairs(land.n(), |x, y| table.get(x, y) - e[x] - e[y] + h_min)
}

/// `H^f = max_{x,y} G^f(x,y) − H^f(x) − H^f(y)` with `H^f` anchored at `min H`.
///
/// The transform is increasing, so the minimax paths of `H` are also minimax for `H^f`.
pub fn critical_height_modified(land: &FiniteLandscape, table: &ElevationTable, spec: &TransformSpec) -> Result<f64> {
    let n = land.n();
    let h_min = land.h_min();
    let hf: Vec<f64> = land
        .energies()
        .iter()
        .map(|&h| spec.gap(h_min, h))
        .collect::<Result<_>>()?;
    let mut gf = vec![0.0; n * n];
    for x in 0..n {
        for y in x..n {
            gf[x * n + y] = spec.gap(h_min, table.get(x, y))?;
        }
    }
    Ok(max_over_pairs(n, |x, y| gf[x * n + y] - hf[x] - hf[y]))
}

/// Clip level used by [`clipped_critical_height`]: `c` clamped into `[min H, max H]`.
pub fn clamp_threshold(land: &FiniteLandscape, c: f64) -> f64 {
    let (lo, hi) = (land.h_min(), land.h_max());
    if c < lo || c > hi {
        warn!("threshold c = {c} outside [{lo}, {hi}]; clamping");
    }
    c.clamp(lo, hi)
}

/// `c* = max_{x,y} G⁰(x,y)∧c − H(x)∧c − H(y)∧c + min H`.
pub fn clipped_critical_height(land: &FiniteLandscape, table: &ElevationTable, c: f64) -> f64 {
    let c = clamp_threshold(land, c);
    let e = land.energies();
    let h_min = land.h_min();
    max_over_pairs(land.n(), |x, y| table.get(x, y).min(c) - e[x].min(c) - e[y].min(c) + h_min)
}

pub fn critical_heights(land: &FiniteLandscape, spec: &TransformSpec) -> Result<CriticalHeights> {
    let table = minimax_elevation(land)?;
    Ok(CriticalHeights {
        h0: critical_height_classical(land, &table),
        hf: critical_height_modified(land, &table, spec)?,
        c_star: clipped_critical_height(land, &table, spec.threshold()),
    })
}

/// Pairs `(x, y)`, `x < y`, attaining `H⁰`, within `tol`.
pub fn critical_pairs(land: &FiniteLandscape, table: &ElevationTable, tol: f64) -> Vec<(usize, usize)> {
    let h0 = critical_height_classical(land, table);
    let e = land.energies();
    let h_min = land.h_min();
    let mut out = Vec::new();
    for x in 0..land.n() {
        for y in x + 1..land.n() {
            if (table.get(x, y) - e[x] - e[y] + h_min - h0).abs() <= tol {
                out.push((x, y));
            }
        }
    }
    out
}

//! Metropolised Ehrenfest urn with linear energy `H(x) = x` on `{0, …, d}`.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use statrs::function::factorial::ln_binomial;

use crate::analysis::spectral_gap;
use crate::chain::{build_mh_generator, FiniteLandscape, Generator};
use crate::error::{Error, Result};
use crate::stats::{linear_fit, LinearFit};
use crate::transform::{Family, TransformSpec};

/// Largest `d` for which exact gaps are computed.
pub const MAX_EXACT_DIMENSION: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modification {
    Classical,
    /// Linear `f` with threshold `c = 1`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhrenfestConfig {
    pub d: usize,
    pub beta: f64,
    pub modification: Modification,
}

impl EhrenfestConfig {
    pub fn new(d: usize, beta: f64, modification: Modification) -> Result<Self> {
        if d < 2 {
            return Err(Error::Config(format!("dimension must be at least 2, got {d}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { d, beta, modification })
    }

    pub fn spec(&self) -> Result<TransformSpec> {
        match self.modification {
            Modification::Classical => TransformSpec::classical(1.0 / self.beta),
            Modification::Linear => TransformSpec::new(Family::Linear, 1.0, 1.0 / self.beta),
        }
    }
}

/// `μ(x) = 2^{−d} C(d, x)` with proposal rates `1 − x/d` up and `x/d` down.
pub fn build_ehrenfest(d: usize) -> Result<FiniteLandscape> {
    if d < 2 {
        return Err(Error::Config(format!("dimension must be at least 2, got {d}")));
    }
    let df = d as f64;
    let energies = (0..=d).map(|x| x as f64).collect();
    let mu = (0..=d)
        .map(|x| (ln_binomial(d as u64, x as u64) - df * LN_2).exp())
        .collect();
    let mut rates = Vec::with_capacity(2 * d);
    for x in 0..d {
        rates.push((x, x + 1, 1.0 - x as f64 / df));
        rates.push((x + 1, x, (x + 1) as f64 / df));
    }
    FiniteLandscape::new(energies, mu, &rates)
}

pub fn build_generator(cfg: &EhrenfestConfig) -> Result<Generator> {
    build_mh_generator(&build_ehrenfest(cfg.d)?, &cfg.spec()?)
}

/// The proposal chain `Q` itself.
pub fn proposal_generator(land: &FiniteLandscape) -> Result<Generator> {
    let log_mu: Vec<f64> = land.mu().iter().map(|m| m.ln()).collect();
    let edges: Vec<(usize, usize, f64)> = land.edges().map(|(x, y, q)| (x, y, q.ln())).collect();
    Generator::from_log_rates(&log_mu, &edges)
}

/// Modified energy for linear `f`, `c = 1`, `ε = 1/β`: `βx` up to 1, then
/// `β + ln((x − 1 + ε)/ε)`.
pub fn modified_hamiltonian_closed_form(x: f64, beta: f64) -> f64 {
    let eps = 1.0 / beta;
    if x <= 1.0 {
        beta * x
    } else {
        beta + ((x - 1.0 + eps) / eps).ln()
    }
}

/// `ln((d/2) · 2^d / (1 + e^{−β})^d)`.
pub fn log_classical_bound(d: usize, beta: f64) -> f64 {
    let df = d as f64;
    (df / 2.0).ln() + df * LN_2 - df * (-beta).exp().ln_1p()
}

/// `ln((d/2) · 2^d e^β / ((ε/(⌊d/2⌋ − 1 + ε)) C(d, ⌊d/2⌋)))`.
pub fn log_modified_bound(d: usize, beta: f64) -> f64 {
    let df = d as f64;
    let eps = 1.0 / beta;
    let half = (d / 2) as f64;
    (df / 2.0).ln() + df * LN_2 + beta - (eps / (half - 1.0 + eps)).ln() - ln_binomial(d as u64, (d / 2) as u64)
}

/// `λ₂(−Q) / Σ e^{−H(x)} μ(x)`, evaluated with the numerical proposal gap.
pub fn template_bound(land: &FiniteLandscape, spec: &TransformSpec, proposal_gap: f64) -> Result<f64> {
    let mut z = 0.0;
    for x in 0..land.n() {
        z += (-spec.gap(land.h_min(), land.energy(x))?).exp() * land.mu()[x];
    }
    Ok(proposal_gap / z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub d: usize,
    pub beta: f64,
    /// `None` in bounds-only mode.
    pub lambda2_classical: Option<f64>,
    pub bound_classical: f64,
    pub lambda2_modified: Option<f64>,
    pub bound_modified: f64,
    /// Numerical gap of the proposal chain (it equals `2/d`).
    pub lambda2_proposal: Option<f64>,
}

impl GapRow {
    pub fn classical_ok(&self) -> Option<bool> {
        self.lambda2_classical.map(|l| l <= self.bound_classical)
    }

    pub fn modified_ok(&self) -> Option<bool> {
        self.lambda2_modified.map(|l| l <= self.bound_modified)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    /// `ln(classical bound)` against `d`.
    pub classical_fit: LinearFit,
    /// `ln(modified bound)` against `ln d`; the slope is the growth exponent.
    pub modified_fit: LinearFit,
    /// Root-mean-square residual of `ln(modified bound) ≈ a + 3 ln d` with `a` fitted.
    pub cubic_residual: f64,
}

fn gap_row(d: usize, beta: f64, exact: bool) -> Result<GapRow> {
    let bound_classical = log_classical_bound(d, beta).exp();
    let bound_modified = log_modified_bound(d, beta).exp();
    if !exact {
        return Ok(GapRow {
            d,
            beta,
            lambda2_classical: None,
            bound_classical,
            lambda2_modified: None,
            bound_modified,
            lambda2_proposal: None,
        });
    }
    if d > MAX_EXACT_DIMENSION {
        return Err(Error::Range(format!("exact gaps need d <= {MAX_EXACT_DIMENSION}, got {d}")));
    }
    let land = build_ehrenfest(d)?;
    let gap = |spec: TransformSpec| -> Result<f64> { spectral_gap(&build_mh_generator(&land, &spec)?) };
    let classical = EhrenfestConfig::new(d, beta, Modification::Classical)?.spec()?;
    let modified = EhrenfestConfig::new(d, beta, Modification::Linear)?.spec()?;
    Ok(GapRow {
        d,
        beta,
        lambda2_classical: Some(gap(classical)?),
        bound_classical,
        lambda2_modified: Some(gap(modified)?),
        bound_modified,
        lambda2_proposal: Some(spectral_gap(&proposal_generator(&land)?)?),
    })
}

/// Gaps and bounds for each `d`. With `exact = false` only the bounds are
/// evaluated, which works for any `d`.
pub fn gap_bounds_report(ds: &[usize], beta: f64, exact: bool) -> Result<GapReport> {
    if ds.len() < 2 {
        return Err(Error::Argument("need at least two dimensions to fit growth".into()));
    }
    for &d in ds {
        EhrenfestConfig::new(d, beta, Modification::Classical)?;
    }
    let rows = ds.par_iter().map(|&d| gap_row(d, beta, exact)).collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.d as f64).collect();
    let logd: Vec<f64> = xs.iter().map(|d| d.ln()).collect();
    let lc: Vec<f64> = rows.iter().map(|r| log_classical_bound(r.d, beta)).collect();
    let lm: Vec<f64> = rows.iter().map(|r| log_modified_bound(r.d, beta)).collect();
    let offsets: Vec<f64> = lm.iter().zip(&logd).map(|(y, l)| y - 3.0 * l).collect();
    let a = offsets.iter().sum::<f64>() / offsets.len() as f64;
    let cubic_residual = (offsets.iter().map(|o| (o - a).powi(2)).sum::<f64>() / offsets.len() as f64).sqrt();
    Ok(GapReport {
        classical_fit: linear_fit(&xs, &lc),
        modified_fit: linear_fit(&logd, &lm),
        cubic_residual,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::quadrature_gap;

    #[test]
    fn small_urn_rates() {
        let land = build_ehrenfest(2).unwrap();
        assert_eq!(land.rate(0, 1), Some(1.0));
        assert_eq!(land.rate(1, 2), Some(0.5));
        assert_eq!(land.rate(1, 0), Some(0.5));
        assert_eq!(land.rate(2, 1), Some(1.0));
    }

    #[test]
    fn binomial_stationary_law() {
        let land = build_ehrenfest(4).unwrap();
        for (m, want) in land.mu().iter().zip([1.0, 4.0, 6.0, 4.0, 1.0]) {
            assert!((m - want / 16.0).abs() < 1e-15);
        }
        let land = build_ehrenfest(30).unwrap();
        for x in 0..30 {
            let a = land.mu()[x] * land.rate(x, x + 1).unwrap();
            let b = land.mu()[x + 1] * land.rate(x + 1, x).unwrap();
            assert!((a - b).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn closed_form_energy() {
        assert_eq!(modified_hamiltonian_closed_form(0.0, 2.0), 0.0);
        assert_eq!(modified_hamiltonian_closed_form(1.0, 2.0), 2.0);
        assert!((modified_hamiltonian_closed_form(3.0, 2.0) - (2.0 + 5f64.ln())).abs() < 1e-15);
        for beta in [0.5, 2.0, 7.0] {
            let spec = EhrenfestConfig::new(40, beta, Modification::Linear).unwrap().spec().unwrap();
            for x in 0..=40 {
                let want = modified_hamiltonian_closed_form(x as f64, beta);
                assert!((spec.gap(0.0, x as f64).unwrap() - want).abs() < 1e-12);
                let q = quadrature_gap(&spec, 0.0, x as f64, 1e-13).unwrap();
                assert!((q - want).abs() < 1e-9 * want.max(1.0));
            }
        }
    }

    #[test]
    fn proposal_gap_is_two_over_d() {
        for d in [4, 10, 33] {
            let row = gap_row(d, 2.0, true).unwrap();
            assert!((row.lambda2_proposal.unwrap() - 2.0 / d as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn bounds_hold_and_grow_as_expected() {
        let ds: Vec<usize> = (8..=64).collect();
        let rep = gap_bounds_report(&ds, 2.0, true).unwrap();
        for r in &rep.rows {
            assert_eq!(r.classical_ok(), Some(true), "{r:?}");
            assert_eq!(r.modified_ok(), Some(true), "{r:?}");
        }
        let slope = (2.0 / (1.0 + (-2f64).exp())).ln();
        let xs: Vec<f64> = ds.iter().map(|&d| d as f64).collect();
        let ys: Vec<f64> = ds.iter().map(|&d| log_classical_bound(d, 2.0) - (d as f64 / 2.0).ln()).collect();
        assert!((linear_fit(&xs, &ys).slope - slope).abs() < 1e-12);
        assert!(rep.classical_fit.r_squared > 0.99);
    }

    #[test]
    fn modified_bound_is_polynomial() {
        let ds: Vec<usize> = (32..=256).step_by(8).collect();
        let rep = gap_bounds_report(&ds, 2.0, false).unwrap();
        assert!(rep.cubic_residual < 0.3, "{}", rep.cubic_residual);
        assert!(rep.modified_fit.slope > 2.0 && rep.modified_fit.slope < 3.5);
        assert!(gap_row(100, 2.0, true).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(EhrenfestConfig::new(1, 2.0, Modification::Classical).is_err());
        assert!(EhrenfestConfig::new(4, 0.0, Modification::Classical).is_err());
    }
}

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::analysis::{critical_height_classical, clipped_critical_height, minimax_elevation};
use crate::chain::{build_mh_generator, FiniteLandscape, Generator};
use crate::error::{Error, Result};
use crate::stats::{linear_fit, LinearFit};
use crate::transform::{Family, TransformSpec};

/// Largest state space handled by the dense gap computation.
pub const MAX_DENSE_STATES: usize = 2000;

/// Spectral gaps below this are treated as underflowed.
pub const MIN_RESOLVABLE_GAP: f64 = 1e-280;

#[derive(Debug, Clone)]
pub struct SpectralGap {
    pub lambda2: f64,
    /// Right eigenvector of `−M` for `λ₂`, normalised to `Σ π v² = 1`.
    pub eigenvector: Vec<f64>,
    /// Dirichlet form of `eigenvector` over its variance. Only meaningful while
    /// `λ₂` is well above `1e−16` times the largest conductance; below that the
    /// rounding in `v(x) − v(y)` dominates.
    pub rayleigh: f64,
}

/// Smallest non-zero eigenvalue of `−M`.
pub fn spectral_gap(gen: &Generator) -> Result<f64> {
    spectral_decomposition(gen).map(|s| s.lambda2)
}

/// `λ₂` as the reciprocal of the top eigenvalue of the π-symmetrised
/// pseudo-inverse of `−M`.
///
/// The pseudo-inverse is assembled from the grounded Green's matrix, whose entries
/// are produced without cancellation, so `λ₂` keeps full relative accuracy at low
/// temperature where a direct eigen-solve of `−M` would only resolve it to
/// `1e−16 · max|M|`.
pub fn spectral_decomposition(gen: &Generator) -> Result<SpectralGap> {
    let n = gen.n();
    if n < 2 {
        return Err(Error::Structure("spectral gap needs at least two states".into()));
    }
    if n > MAX_DENSE_STATES {
        return Err(Error::Range(format!(
            "{n} states exceeds the dense limit of {MAX_DENSE_STATES}"
        )));
    }
    let lp = gen.log_stationary();
    let shift = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ground = lp.iter().position(|&l| l == shift).unwrap_or(0);
    let pi: Vec<f64> = lp.iter().map(|l| (l - shift).exp()).collect();
    let cond = gen.conductances();
    let active: Vec<usize> = (0..n).filter(|&x| x != ground).collect();
    let green = crate::linalg::GroundedFactor::new(n, &cond, &active)?.inverse();

    let sq: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
    let norm = sq.iter().map(|s| s * s).sum::<f64>().sqrt();
    let w: Vec<f64> = sq.iter().map(|s| s / norm).collect();
    let m = n - 1;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            let (x, y) = (active[i], active[j]);
            a[(x, y)] = sq[x] * green[i * m + j] * sq[y];
        }
    }
    let wv = DVector::from_vec(w.clone());
    let aw = &a * &wv;
    let s = wv.dot(&aw);
    let k = &a - &wv * aw.transpose() - &aw * wv.transpose() + (&wv * wv.transpose()) * s;
    let eig = SymmetricEigen::try_new(k.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::numerical("spectral_gap", "eigen-solver did not converge"))?;
    let (top, &mu) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("n >= 2");
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::numerical("spectral_gap", format!("degenerate pseudo-inverse spectrum ({mu})")));
    }
    let lambda2 = 1.0 / mu;
    let phi = checked_eigenvector(&k, mu, eig.eigenvectors.column(top).into_owned())?;
    let v: Vec<f64> = (0..n).map(|x| phi[x] / sq[x]).collect();
    let mut dirichlet = 0.0;
    for x in 0..n {
        for y in x + 1..n {
            let c = cond[x * n + y];
            if c > 0.0 {
                dirichlet += c * (v[x] - v[y]).powi(2);
            }
        }
    }
    let variance: f64 = (0..n).map(|x| pi[x] * v[x] * v[x]).sum();
    Ok(SpectralGap {
        lambda2,
        eigenvector: v.iter().map(|x| x / variance.sqrt()).collect(),
        rayleigh: dirichlet / variance,
    })
}

/// The QR sweep occasionally returns an orthonormal but wrong pair of columns for
/// nearly coupled eigenvalues; shifted inverse iteration repairs such a vector.
fn checked_eigenvector(k: &DMatrix<f64>, mu: f64, phi: DVector<f64>) -> Result<DVector<f64>> {
    let tol = 1e-9 * mu;
    // Max-norm: entries span hundreds of decades at low temperature and squares overflow.
    let residual = |v: &DVector<f64>| (k * v - v * mu).amax();
    if residual(&phi) <= tol {
        return Ok(phi);
    }
    let n = k.nrows();
    let sigma = mu * (1.0 + 1e-10);
    let lu = (k - DMatrix::<f64>::identity(n, n) * sigma).lu();
    let mut v = phi;
    for _ in 0..8 {
        let mut x = lu
            .solve(&v)
            .ok_or_else(|| Error::numerical("spectral_gap", "singular shift in eigenvector refinement"))?;
        x /= x.amax();
        x /= x.norm();
        v = x;
        if residual(&v) <= tol {
            return Ok(v);
        }
    }
    Err(Error::numerical("spectral_gap", "eigenvector refinement did not converge"))
}

/// Regression of `ln λ₂` against `β` for one shape family and threshold.
#[derive(Debug, Clone)]
pub struct SlopeReport {
    /// `(β, λ₂)` for every β that produced a resolvable gap.
    pub points: Vec<(f64, f64)>,
    pub discarded: Vec<f64>,
    pub fit: LinearFit,
    /// `−c*` for a modified chain, `−H⁰` for the classical one.
    pub predicted: f64,
    pub c_star: f64,
    pub h0: f64,
}

impl SlopeReport {
    pub fn slope(&self) -> f64 {
        self.fit.slope
    }
}

pub fn gap_slope_vs_beta(land: &FiniteLandscape, family: &Family, c: f64, betas: &[f64]) -> Result<SlopeReport> {
    if betas.len() < 3 {
        return Err(Error::Argument("need at least three inverse temperatures".into()));
    }
    if betas.windows(2).any(|w| !(w[1] > w[0])) || !(betas[0] > 0.0) {
        return Err(Error::Argument("inverse temperatures must be positive and increasing".into()));
    }
    let table = minimax_elevation(land)?;
    let h0 = critical_height_classical(land, &table);
    let c_star = clipped_critical_height(land, &table, c);
    let gaps: Vec<Result<Option<f64>>> = betas
        .par_iter()
        .map(|&beta| {
            let spec = TransformSpec::new(family.clone(), c, 1.0 / beta)?;
            let gen = build_mh_generator(land, &spec)?;
            match spectral_gap(&gen) {
                Ok(l) if l >= MIN_RESOLVABLE_GAP => Ok(Some(l)),
                Ok(_) | Err(Error::Numerical { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut points = Vec::new();
    let mut discarded = Vec::new();
    for (&beta, g) in betas.iter().zip(gaps) {
        match g? {
            Some(l) => points.push((beta, l)),
            None => discarded.push(beta),
        }
    }
    if points.len() < 3 {
        return Err(Error::Range(format!(
            "only {} inverse temperatures gave a gap above {MIN_RESOLVABLE_GAP:e}; use smaller beta",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let predicted = if matches!(family, Family::Zero) { -h0 } else { -c_star };
    Ok(SlopeReport {
        points,
        discarded,
        fit: linear_fit(&xs, &ys),
        predicted,
        c_star,
        h0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_gap_is_sum_of_rates() {
        let (a, b): (f64, f64) = (0.3, 1.7);
        let g = Generator::from_log_rates(&[b.ln(), a.ln()], &[(0, 1, a.ln()), (1, 0, b.ln())]).unwrap();
        let s = spectral_decomposition(&g).unwrap();
        assert!((s.lambda2 - (a + b)).abs() < 1e-14);
        assert!((s.rayleigh - s.lambda2).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_gap() {
        for n in [3usize, 5, 8] {
            let r: f64 = 0.75;
            let mut tr = Vec::new();
            for x in 0..n {
                for y in 0..n {
                    if x != y {
                        tr.push((x, y, r.ln()));
                    }
                }
            }
            let g = Generator::from_log_rates(&vec![0.0; n], &tr).unwrap();
            assert!((spectral_gap(&g).unwrap() - n as f64 * r).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_eigenvector_is_repaired() {
        let k = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let mu = SymmetricEigen::new(k.clone()).eigenvalues.max();
        let bad = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        let fixed = checked_eigenvector(&k, mu, bad).unwrap();
        assert!((fixed.norm() - 1.0).abs() < 1e-12);
        assert!((&k * &fixed - mu * &fixed).norm() < 1e-9 * mu);
        assert_eq!(checked_eigenvector(&k, mu, fixed.clone()).unwrap(), fixed);
    }

    #[test]
    fn matches_dense_symmetric_solver() {
        let land = FiniteLandscape::grid(3, 3, vec![0.0, 1.0, 0.3, 2.0, 1.5, 0.2, 0.7, 0.1, 1.0]).unwrap();
        let spec = TransformSpec::new(Family::Linear, 0.5, 0.8).unwrap();
        let g = build_mh_generator(&land, &spec).unwrap();
        let n = g.n();
        let m = g.to_dense();
        let pi = g.stationary();
        let s = DMatrix::from_fn(n, n, |i, j| -m[i * n + j] * (pi[i] / pi[j]).sqrt());
        let s = (&s + s.transpose()) * 0.5;
        let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let got = spectral_decomposition(&g).unwrap();
        assert!((got.lambda2 - ev[1]).abs() < 1e-12 * ev[1], "{} vs {}", got.lambda2, ev[1]);
        assert!((got.rayleigh - got.lambda2).abs() < 1e-10 * got.lambda2);
    }

    #[test]
    fn low_temperature_gap_keeps_relative_accuracy() {
        // Three-state path: the non-zero eigenvalues solve λ² − Tλ + D = 0.
        let land = FiniteLandscape::path(vec![0.0, 3.0, 1.0]).unwrap();
        for beta in [5.0, 60.0, 200.0] {
            let g = build_mh_generator(&land, &TransformSpec::classical(1.0 / beta).unwrap()).unwrap();
            let r = |x, y| g.rate(x, y);
            let t = r(0, 1) + r(1, 0) + r(1, 2) + r(2, 1);
            let d = r(0, 1) * r(1, 2) + r(1, 0) * r(2, 1) + r(0, 1) * r(2, 1);
            let exact = 2.0 * d / (t + (t * t - 4.0 * d).sqrt());
            let s = spectral_decomposition(&g).unwrap();
            assert!((s.lambda2 - exact).abs() < 1e-12 * exact, "beta {beta}: {} vs {exact}", s.lambda2);
            if beta < 10.0 {
                assert!((s.rayleigh - s.lambda2).abs() < 1e-10 * s.lambda2);
            }
        }
    }

    #[test]
    fn slope_rejects_short_grids() {
        let land = FiniteLandscape::path(vec![0.0, 3.0, 1.0]).unwrap();
        assert!(gap_slope_vs_beta(&land, &Family::Zero, 0.0, &[1.0, 2.0]).is_err());
        assert!(gap_slope_vs_beta(&land, &Family::Zero, 0.0, &[3.0, 2.0, 4.0]).is_err());
    }

    #[test]
    fn flat_landscape_has_zero_slope() {
        let land = FiniteLandscape::path(vec![1.0; 5]).unwrap();
        let r = gap_slope_vs_beta(&land, &Family::Linear, 1.0, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        assert!(r.slope().abs() < 1e-10);
        assert_eq!(r.predicted, 0.0);
    }
}

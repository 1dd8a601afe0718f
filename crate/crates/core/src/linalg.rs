//! Subtraction-free elimination for grounded Laplacians.
//!
//! A reversible chain is described by symmetric conductances `C(x, y) = π(x) M(x, y)`.
//! Removing (grounding) a set of states leaves an M-matrix `L = diag(d) − C` whose
//! pivots can be formed as sums of positive terms, in the spirit of the GTH
//! algorithm. Solves and inverses then only add and multiply non-negative numbers,
//! so entries stay accurate even when they span hundreds of orders of magnitude.

use crate::error::{Error, Result};

/// `L = L̃ D L̃ᵀ` of a grounded Laplacian restricted to `active` states.
#[derive(Debug, Clone)]
pub struct GroundedFactor {
    active: Vec<usize>,
    pivots: Vec<f64>,
    // Row k holds C⁽ᵏ⁾(k, j) / d_k for j > k, row-major m × m.
    upper: Vec<f64>,
}

impl GroundedFactor {
    /// Factor the Laplacian of the dense `n × n` conductance matrix `cond`,
    /// keeping only `active` states. Conductance into the remaining states acts as
    /// a leak on the diagonal.
    pub fn new(n: usize, cond: &[f64], active: &[usize]) -> Result<Self> {
        if cond.len() != n * n {
            return Err(Error::Argument(format!(
                "conductance matrix has {} entries, expected {}",
                cond.len(),
                n * n
            )));
        }
        let m = active.len();
        if m == 0 {
            return Err(Error::Argument("no active states".into()));
        }
        let mut inside = vec![false; n];
        for &a in active {
            if a >= n || inside[a] {
                return Err(Error::Argument(format!("bad active state {a}")));
            }
            inside[a] = true;
        }
        let mut w = vec![0.0; m * m];
        let mut leak = vec![0.0; m];
        for (i, &a) in active.iter().enumerate() {
            for (j, &b) in active.iter().enumerate() {
                if i != j {
                    w[i * m + j] = cond[a * n + b];
                }
            }
            leak[i] = (0..n).filter(|&y| !inside[y]).map(|y| cond[a * n + y]).sum();
        }

        let mut pivots = vec![0.0; m];
        let mut upper = vec![0.0; m * m];
        for k in 0..m {
            let d: f64 = w[k * m + k + 1..(k + 1) * m].iter().sum::<f64>() + leak[k];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::numerical(
                    "grounded elimination",
                    format!("pivot {k} is {d}; conductances underflowed or the graph is disconnected"),
                ));
            }
            pivots[k] = d;
            for j in k + 1..m {
                upper[k * m + j] = w[k * m + j] / d;
            }
            for i in k + 1..m {
                let wik = w[i * m + k];
                if wik == 0.0 {
                    continue;
                }
                for j in k + 1..m {
                    if j != i {
                        w[i * m + j] += wik * upper[k * m + j];
                    }
                }
                leak[i] += upper[k * m + i] * leak[k];
            }
        }
        Ok(Self {
            active: active.to_vec(),
            pivots,
            upper,
        })
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn dim(&self) -> usize {
        self.active.len()
    }

    /// Solve `L h = b` for non-negative `b` (indexed like `active`).
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = self.dim();
        let u = &self.upper;
        let mut y = b.to_vec();
        for i in 0..m {
            let mut acc = y[i];
            for k in 0..i {
                acc += u[k * m + i] * y[k];
            }
            y[i] = acc;
        }
        let mut h = vec![0.0; m];
        for i in (0..m).rev() {
            let mut acc = y[i] / self.pivots[i];
            for k in i + 1..m {
                acc += u[i * m + k] * h[k];
            }
            h[i] = acc;
        }
        h
    }

    /// `L⁻¹`, row-major over `active` indices. Every entry is positive.
    pub fn inverse(&self) -> Vec<f64> {
        let m = self.dim();
        let mut inv = vec![0.0; m * m];
        let mut e = vec![0.0; m];
        for j in 0..m {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..m {
                inv[i * m + j] = col[i];
            }
        }
        // Symmetrize away rounding asymmetry.
        for i in 0..m {
            for j in i + 1..m {
                let s = 0.5 * (inv[i * m + j] + inv[j * m + i]);
                inv[i * m + j] = s;
                inv[j * m + i] = s;
            }
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn laplacian(n: usize, c: &[f64], active: &[usize]) -> DMatrix<f64> {
        let m = active.len();
        DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                (0..n).filter(|&y| y != active[i]).map(|y| c[active[i] * n + y]).sum()
            } else {
                -c[active[i] * n + active[j]]
            }
        })
    }

    #[test]
    fn inverse_matches_dense_solver() {
        let n = 5;
        let mut c = vec![0.0; n * n];
        let edges = [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0), (3, 4, 0.25), (0, 3, 0.1)];
        for &(a, b, w) in &edges {
            c[a * n + b] = w;
            c[b * n + a] = w;
        }
        let active = [0, 2, 3, 4];
        let f = GroundedFactor::new(n, &c, &active).unwrap();
        let inv = f.inverse();
        let dense = laplacian(n, &c, &active).try_inverse().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((inv[i * 4 + j] - dense[(i, j)]).abs() < 1e-12 * dense[(i, j)].abs());
            }
        }
    }

    #[test]
    fn tiny_conductances_keep_relative_accuracy() {
        // Three states in series with a bottleneck of e^-600.
        let n = 3;
        let tiny = (-600f64).exp();
        let mut c = vec![0.0; n * n];
        c[1] = 1.0;
        c[3] = 1.0;
        c[5] = tiny;
        c[7] = tiny;
        let f = GroundedFactor::new(n, &c, &[1, 2]).unwrap();
        let h = f.solve(&[0.0, 1.0]);
        // Resistance from state 2 to ground is 1/tiny + 1.
        assert!((h[1] * tiny - (1.0 + tiny)).abs() < 1e-14);
    }

    #[test]
    fn disconnected_active_set_is_reported() {
        let n = 3;
        let mut c = vec![0.0; n * n];
        c[1] = 1.0;
        c[3] = 1.0;
        assert!(GroundedFactor::new(n, &c, &[1, 2]).is_err());
    }
}

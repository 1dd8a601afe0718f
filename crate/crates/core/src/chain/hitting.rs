use crate::chain::sample::target_mask;
use crate::chain::Generator;
use crate::error::{Error, Result};
use crate::linalg::GroundedFactor;
use crate::stats::log_sum_exp;

/// `ln E_{x0}[τ_target]` for a birth–death generator, from the explicit sum
/// `Σ_{target < m ≤ x0} π([m, end]) / (π(m) M(m, m−1))`, evaluated in logs.
/// Positions refer to the path order; the mirrored sum handles targets on the right.
pub fn log_exact_mean_hitting_birth_death(gen: &Generator, x0: usize, target: usize) -> Result<f64> {
    let n = gen.n();
    if x0 >= n || target >= n {
        return Err(Error::Argument(format!("states ({x0}, {target}) out of range")));
    }
    if x0 == target {
        return Ok(f64::NEG_INFINITY);
    }
    let order = gen
        .path_order()
        .ok_or_else(|| Error::Structure("transition graph is not a path".into()))?;
    let mut pos = vec![0; n];
    for (i, &x) in order.iter().enumerate() {
        pos[x] = i;
    }
    // Orient the path so that the target lies to the left of the start.
    let order: Vec<usize> = if pos[target] < pos[x0] {
        order
    } else {
        order.into_iter().rev().collect()
    };
    let (a, b) = {
        let p = |s| order.iter().position(|&x| x == s).unwrap();
        (p(target), p(x0))
    };
    let lp = gen.log_stationary();
    // Suffix log-masses π([m, end]).
    let mut suffix = vec![f64::NEG_INFINITY; n + 1];
    for m in (0..n).rev() {
        suffix[m] = log_sum_exp(&[suffix[m + 1], lp[order[m]]]);
    }
    let mut terms = Vec::with_capacity(b - a);
    for m in a + 1..=b {
        let (s, left) = (order[m], order[m - 1]);
        let lr = gen
            .log_rate(s, left)
            .ok_or_else(|| Error::Structure(format!("missing transition ({s}, {left})")))?;
        terms.push(suffix[m] - lp[s] - lr);
    }
    Ok(log_sum_exp(&terms))
}

pub fn exact_mean_hitting_birth_death(gen: &Generator, x0: usize, target: usize) -> Result<f64> {
    let l = log_exact_mean_hitting_birth_death(gen, x0, target)?;
    let v = l.exp();
    if v.is_infinite() {
        return Err(Error::Range(format!(
            "mean hitting time e^{l:.3} overflows; use the log version"
        )));
    }
    Ok(v)
}

/// Mean hitting times of `target` from every state, by solving
/// `M h = −1` off the target with the grounded Laplacian.
pub fn mean_hitting_times(gen: &Generator, target: &[usize]) -> Result<Vec<f64>> {
    let n = gen.n();
    let mask = target_mask(n, target)?;
    let active: Vec<usize> = (0..n).filter(|&x| !mask[x]).collect();
    let mut h = vec![0.0; n];
    if active.is_empty() {
        return Ok(h);
    }
    let cond = gen.conductances();
    let factor = GroundedFactor::new(n, &cond, &active)?;
    let shift = gen.log_stationary().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let b: Vec<f64> = active.iter().map(|&x| (gen.log_stationary()[x] - shift).exp()).collect();
    for (i, v) in factor.solve(&b).into_iter().enumerate() {
        h[active[i]] = v;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_mh_generator, FiniteLandscape};
    use crate::transform::TransformSpec;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn two_state_is_single_exponential() {
        let g = Generator::from_log_rates(&[0.0, 0.0], &[(0, 1, 0.5f64.ln()), (1, 0, 0.5f64.ln())]).unwrap();
        assert!((exact_mean_hitting_birth_death(&g, 1, 0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(exact_mean_hitting_birth_death(&g, 1, 1).unwrap(), 0.0);
    }

    #[test]
    fn agrees_with_dense_linear_system() {
        let land = FiniteLandscape::path(vec![0.0, 1.2, 0.4, 2.0, 0.9, 0.1]).unwrap();
        let g = build_mh_generator(&land, &TransformSpec::classical(0.7).unwrap()).unwrap();
        let m = g.to_dense();
        let k = 5;
        let sub = DMatrix::from_fn(k, k, |i, j| -m[(i + 1) * 6 + j + 1]);
        let h = sub.lu().solve(&DVector::from_element(k, 1.0)).unwrap();
        let grounded = mean_hitting_times(&g, &[0]).unwrap();
        for x in 1..6 {
            let exact = exact_mean_hitting_birth_death(&g, x, 0).unwrap();
            assert!((exact - h[x - 1]).abs() < 1e-10 * exact);
            assert!((grounded[x] - exact).abs() < 1e-12 * exact);
        }
        // Rightward target.
        let right = exact_mean_hitting_birth_death(&g, 1, 4).unwrap();
        let grounded = mean_hitting_times(&g, &[4]).unwrap();
        assert!((right - grounded[1]).abs() < 1e-12 * right);
    }

    #[test]
    fn rejects_non_path() {
        let land = FiniteLandscape::complete(vec![0.0, 1.0, 2.0]).unwrap();
        let g = build_mh_generator(&land, &TransformSpec::classical(1.0).unwrap()).unwrap();
        assert!(matches!(
            exact_mean_hitting_birth_death(&g, 2, 0),
            Err(Error::Structure(_))
        ));
    }
}

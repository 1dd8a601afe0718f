use nalgebra::DMatrix;

use crate::chain::Generator;
use crate::error::{Error, Result};

/// Above this many expected uniformized jumps the vector recursion gives way to
/// scaling and squaring of the dense kernel.
const VECTOR_UNIFORMIZATION_LIMIT: f64 = 2000.0;
const POISSON_TAIL: f64 = 1e-13;

pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Argument(format!(
            "distributions have lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    let s: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * s).min(1.0))
}

fn check_distribution(gen: &Generator, init: &[f64]) -> Result<()> {
    if init.len() != gen.n() {
        return Err(Error::Argument(format!(
            "initial distribution has {} entries for {} states",
            init.len(),
            gen.n()
        )));
    }
    if init.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::Argument("initial distribution has negative entries".into()));
    }
    let s: f64 = init.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!("initial distribution sums to {s}")));
    }
    Ok(())
}

/// Poisson(λ) weights `w_0, …, w_K` with the tail beyond `K` below [`POISSON_TAIL`].
fn poisson_weights(lambda: f64) -> Vec<f64> {
    let ln_l = lambda.ln();
    let mut log_w = -lambda;
    let mut w = vec![log_w.exp()];
    let mut k = 0usize;
    loop {
        k += 1;
        log_w += ln_l - (k as f64).ln();
        let wk = log_w.exp();
        w.push(wk);
        let kf = k as f64;
        if kf + 1.0 > lambda && wk / (1.0 - lambda / (kf + 1.0)) < POISSON_TAIL {
            break;
        }
    }
    w
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

/// `init · exp(M t)` by uniformization.
pub fn distribution_at_time(gen: &Generator, init: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Argument(format!("time must be finite and non-negative, got {t}")));
    }
    check_distribution(gen, init)?;
    let lambda = gen.max_exit_rate();
    if t == 0.0 || lambda == 0.0 {
        return Ok(init.to_vec());
    }
    let lt = lambda * t;
    if lt > VECTOR_UNIFORMIZATION_LIMIT {
        let p = transition_matrix(gen, t)?;
        let v = DMatrix::from_row_slice(1, gen.n(), init) * p;
        let mut out: Vec<f64> = v.iter().copied().collect();
        normalize(&mut out);
        return Ok(out);
    }
    let weights = poisson_weights(lt);
    let n = gen.n();
    let mut v = init.to_vec();
    let mut acc: Vec<f64> = v.iter().map(|x| x * weights[0]).collect();
    let mut next = vec![0.0; n];
    for &w in &weights[1..] {
        step(gen, lambda, &v, &mut next);
        std::mem::swap(&mut v, &mut next);
        for (a, x) in acc.iter_mut().zip(&v) {
            *a += w * x;
        }
    }
    normalize(&mut acc);
    Ok(acc)
}

/// `next = v · (I + M/Λ)`.
fn step(gen: &Generator, lambda: f64, v: &[f64], next: &mut [f64]) {
    for x in 0..gen.n() {
        next[x] = v[x] * (1.0 - gen.exit_rate(x) / lambda);
    }
    for x in 0..gen.n() {
        if v[x] == 0.0 {
            continue;
        }
        for tr in gen.transitions(x) {
            next[tr.to] += v[x] * tr.rate / lambda;
        }
    }
}

/// Dense `exp(M t)` by uniformization on a short step followed by repeated squaring.
pub fn transition_matrix(gen: &Generator, t: f64) -> Result<DMatrix<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Argument(format!("time must be finite and non-negative, got {t}")));
    }
    let n = gen.n();
    let lambda = gen.max_exit_rate();
    if t == 0.0 || lambda == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let mut squarings = 0u32;
    let mut s = t;
    while lambda * s > 0.5 {
        s *= 0.5;
        squarings += 1;
        if squarings > 2000 {
            return Err(Error::numerical("transition_matrix", "time horizon too large"));
        }
    }
    let mut kernel = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        kernel[(x, x)] = 1.0 - gen.exit_rate(x) / lambda;
        for tr in gen.transitions(x) {
            kernel[(x, tr.to)] = tr.rate / lambda;
        }
    }
    let weights = poisson_weights(lambda * s);
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut p = &power * weights[0];
    for &w in &weights[1..] {
        power = &power * &kernel;
        p += &power * w;
    }
    normalize_rows(&mut p);
    // A row-sum error δ becomes 2δ per squaring; renormalizing keeps it at rounding level.
    for _ in 0..squarings {
        p = &p * &p;
        normalize_rows(&mut p);
    }
    Ok(p)
}

fn normalize_rows(p: &mut DMatrix<f64>) {
    for mut row in p.row_iter_mut() {
        let s: f64 = row.iter().sum();
        row /= s;
    }
}

/// Worst-case distance to stationarity `max_x TV(P_t(x, ·), π)`.
pub fn worst_case_distance(gen: &Generator, t: f64) -> Result<f64> {
    let p = transition_matrix(gen, t)?;
    let pi = gen.stationary();
    let mut worst = 0.0f64;
    for row in p.row_iter() {
        let r: Vec<f64> = row.iter().copied().collect();
        worst = worst.max(total_variation(&r, pi)?);
    }
    Ok(worst)
}

/// Smallest `t` on the grid `t₀·1.05^k`, `t₀ = 10⁻³/Λ`, with worst-case distance
/// below `threshold`; zero if the chain already starts within it.
pub fn mixing_time(gen: &Generator, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Argument(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let pi = gen.stationary();
    let d0 = pi.iter().map(|p| 1.0 - p).fold(0.0, f64::max);
    if d0 < threshold {
        return Ok(0.0);
    }
    let t0 = 1e-3 / gen.max_exit_rate();
    let grid = |k: u32| t0 * 1.05f64.powi(k as i32);
    let below = |k: u32| -> Result<bool> { Ok(worst_case_distance(gen, grid(k))? < threshold) };
    // Exponential search for an upper bracket, then bisection (the distance is
    // non-increasing in t).
    let mut hi = 1u32;
    while !below(hi)? {
        hi *= 2;
        if grid(hi) > 1e300 {
            return Err(Error::numerical("mixing_time", "no mixing before t = 1e300"));
        }
    }
    let mut lo = if hi == 1 { 0 } else { hi / 2 };
    if lo == 0 && below(0)? {
        return Ok(grid(0));
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if below(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(grid(hi))
}

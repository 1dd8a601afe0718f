use std::f64::consts::PI;

use log::warn;
use statrs::function::factorial::ln_binomial;

use crate::chain::{log_exact_mean_hitting_birth_death, Generator};
use crate::curie_weiss::{grid_point, CurieWeiss, Stationarity, Variant};
use crate::error::{Error, Result};
use crate::transform::{Family, TransformSpec};

/// Lumped Glauber dynamics on `Γ_N = {−1, −1 + 2/N, …, 1}`.
#[derive(Debug, Clone)]
pub struct MagnetizationChain {
    pub n: usize,
    pub grid: Vec<f64>,
    pub generator: Generator,
}

impl MagnetizationChain {
    pub fn index_of(&self, m: f64) -> usize {
        nearest_grid_index(m, self.n)
    }
}

/// Nearest point of `Γ_N` to `m`; ties go to the smaller magnetization.
pub fn nearest_grid_index(m: f64, n: usize) -> usize {
    let k = (m + 1.0) * n as f64 / 2.0;
    let lo = k.floor().clamp(0.0, n as f64) as usize;
    let hi = (lo + 1).min(n);
    let (d_lo, d_hi) = ((m - grid_point(lo, n)).abs(), (grid_point(hi, n) - m).abs());
    if d_hi < d_lo - 1e-12 {
        hi
    } else {
        lo
    }
}

/// `N (E^f(m') − E^f(m))` or `β N (E(m') − E(m))`.
fn scaled_energy_step(cw: &CurieWeiss, spec: Option<&TransformSpec>, n: usize, m: f64, m2: f64) -> Result<f64> {
    let (e, e2) = (cw.energy(m)?, cw.energy(m2)?);
    Ok(match spec {
        None => cw.beta * n as f64 * (e2 - e),
        Some(s) => n as f64 * s.gap(e, e2)?,
    })
}

/// Up-rate `(1 − m)/2 · e^{−N(ΔE^f)₊}`, down-rate `(1 + m)/2 · e^{−N(ΔE^f)₊}`;
/// the classical chain uses `βNΔE`.
pub fn build_magnetization_generator(cw: &CurieWeiss, variant: &Variant, n: usize) -> Result<MagnetizationChain> {
    if n < 2 {
        return Err(Error::Config(format!("need N >= 2 spins, got {n}")));
    }
    if n > 100_000 {
        return Err(Error::Range(format!("N = {n} exceeds 100000")));
    }
    let spec = cw.spec(variant)?;
    let spec = spec.as_ref();
    let grid: Vec<f64> = (0..=n).map(|k| grid_point(k, n)).collect();
    let d = cw.reference_level();
    let mut log_weights = Vec::with_capacity(n + 1);
    for (k, &m) in grid.iter().enumerate() {
        let e = cw.energy(m)?;
        let exponent = match spec {
            None => cw.beta * n as f64 * (e - d),
            Some(s) => n as f64 * s.gap(d, e)?,
        };
        log_weights.push(ln_binomial(n as u64, k as u64) - exponent);
    }
    let mut transitions = Vec::with_capacity(2 * n);
    for k in 0..n {
        let (m, m2) = (grid[k], grid[k + 1]);
        let up = scaled_energy_step(cw, spec, n, m, m2)?;
        transitions.push((k, k + 1, ((1.0 - m) / 2.0).ln() - up.max(0.0)));
        transitions.push((k + 1, k, ((1.0 + m2) / 2.0).ln() - (-up).max(0.0)));
    }
    let generator = Generator::from_log_rates(&log_weights, &transitions)?;
    Ok(MagnetizationChain { n, grid, generator })
}

/// Exact and Eyring–Kramers mean crossover times from `m₊*(N)` to `m₋*(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub n: usize,
    pub from: f64,
    pub to: f64,
    pub log_exact: f64,
    /// `None` when the relevant free energy has a single well.
    pub log_eyring_kramers: Option<f64>,
    pub saddle: Option<f64>,
}

impl Crossover {
    pub fn exact(&self) -> f64 {
        self.log_exact.exp()
    }

    pub fn eyring_kramers(&self) -> Option<f64> {
        self.log_eyring_kramers.map(f64::exp)
    }

    /// `(1/N) ln E[τ]`.
    pub fn rate(&self) -> f64 {
        self.log_exact / self.n as f64
    }
}

/// Classical minima `m₋* < 0 < m₊*` and saddle `z*`.
pub fn classical_wells(cw: &CurieWeiss) -> Result<(f64, f64, f64)> {
    let roots = cw.solve_mean_field(&Variant::Classical, 1e-12)?;
    let minima = roots.minima();
    let maxima = roots.maxima();
    if minima.len() != 2 || maxima.len() != 1 {
        return Err(Error::Precondition(format!(
            "classical free energy is not a double well at beta = {}, h = {}",
            cw.beta, cw.h
        )));
    }
    let (a, b) = (minima[0], minima[1]);
    // The deeper well is the one with the larger |m| when h < 0 pulls it negative.
    let ga = cw.free_energy(&Variant::Classical, a)?;
    let gb = cw.free_energy(&Variant::Classical, b)?;
    let (global, local) = if ga <= gb { (a, b) } else { (b, a) };
    Ok((global, local, maxima[0]))
}

fn second_derivative(f: impl Fn(f64) -> Result<f64>, x: f64) -> Result<f64> {
    let d2 = |h: f64| -> Result<f64> { Ok((f(x + h)? - 2.0 * f(x)? + f(x - h)?) / (h * h)) };
    let coarse = d2(1e-4)?;
    let fine = d2(5e-5)?;
    if (coarse - fine).abs() > 1e-3 * coarse.abs().max(1e-8) {
        warn!("second derivative at {x} unstable under step halving: {coarse} vs {fine}");
    }
    Ok(coarse)
}

pub fn crossover_time(cw: &CurieWeiss, variant: &Variant, n: usize) -> Result<Crossover> {
    let (m_minus, m_plus, _) = classical_wells(cw)?;
    let chain = build_magnetization_generator(cw, variant, n)?;
    let from = chain.index_of(m_plus);
    let to = chain.index_of(m_minus);
    let log_exact = log_exact_mean_hitting_birth_death(&chain.generator, from, to)?;

    // Saddle of the relevant curve between the two wells.
    let roots = cw.solve_mean_field(variant, 1e-10)?;
    let lo = m_minus.min(m_plus);
    let hi = m_minus.max(m_plus);
    let has_plus_well = roots
        .roots
        .iter()
        .any(|r| r.kind == Stationarity::Minimum && (r.m - m_plus).abs() < 1e-6);
    let saddle = roots
        .roots
        .iter()
        .filter(|r| r.kind == Stationarity::Maximum && r.m > lo && r.m < hi)
        .map(|r| r.m)
        .max_by(|a, b| {
            let fa = cw.scaled_free_energy(variant, *a).unwrap_or(f64::NEG_INFINITY);
            let fb = cw.scaled_free_energy(variant, *b).unwrap_or(f64::NEG_INFINITY);
            fa.total_cmp(&fb)
        });
    let log_ek = match (saddle, has_plus_well) {
        (Some(z), true) => {
            let f = |m: f64| cw.scaled_free_energy(variant, m);
            let fz = f(z)?;
            let fp = f(m_plus)?;
            let curv_z = -second_derivative(f, z)?;
            let curv_p = second_derivative(f, m_plus)?;
            if !(curv_z > 0.0 && curv_p > 0.0) {
                return Err(Error::numerical(
                    "crossover_time",
                    format!("non-quadratic extremum (curvatures {curv_z}, {curv_p})"),
                ));
            }
            let nf = n as f64;
            Some(
                nf * (fz - fp) + (2.0 / (1.0 - z.abs())).ln() + 0.5 * ((1.0 - z * z) / (1.0 - m_plus * m_plus)).ln()
                    + (2.0 * PI * nf / 4.0).ln()
                    - 0.5 * (curv_z * curv_p).ln(),
            )
        }
        _ => None,
    };
    Ok(Crossover {
        n,
        from: chain.grid[from],
        to: chain.grid[to],
        log_exact,
        log_eyring_kramers: log_ek,
        saddle: if log_ek.is_some() { saddle } else { None },
    })
}

/// Pass/fail per hypothesis of the convexification result.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexificationReport {
    /// `c ∈ [E(m₋*), E(m₊*))`.
    pub threshold_between_wells: bool,
    /// `c < h²/2`.
    pub threshold_below_peak: bool,
    /// `−h − √(h² − 2c) ≤ z*`.
    pub interval_left_of_saddle: bool,
    /// `m > tanh((m + h)/(f((E(m) − c)₊) + ε))` on `[−h − √(h² − 2c), −h + √(h² − 2c)]`.
    pub residual_positive: bool,
    pub interval: Option<(f64, f64)>,
}

impl ConvexificationReport {
    pub fn all_pass(&self) -> bool {
        self.threshold_between_wells && self.threshold_below_peak && self.interval_left_of_saddle && self.residual_positive
    }
}

pub const CONVEXIFICATION_GRID: usize = 100_000;

pub fn convexification_check(cw: &CurieWeiss, family: &Family, c: f64) -> Result<ConvexificationReport> {
    if cw.beta <= 1.0 {
        return Err(Error::Precondition(format!("needs beta > 1, got {}", cw.beta)));
    }
    if cw.h >= 0.0 {
        return Err(Error::Precondition(format!("needs h < 0, got {}", cw.h)));
    }
    let (m_minus, m_plus, z) = classical_wells(cw)?;
    let h = cw.h;
    let threshold_between_wells = c >= cw.energy(m_minus)? && c < cw.energy(m_plus)?;
    let threshold_below_peak = c < h * h / 2.0;
    if !threshold_below_peak {
        return Ok(ConvexificationReport {
            threshold_between_wells,
            threshold_below_peak,
            interval_left_of_saddle: false,
            residual_positive: false,
            interval: None,
        });
    }
    let root = (h * h - 2.0 * c).sqrt();
    let (a, b) = (-h - root, -h + root);
    let interval_left_of_saddle = a <= z;
    let spec = TransformSpec::new(family.clone(), c, cw.epsilon())?;
    let (lo, hi) = (a.max(-1.0), b.min(1.0));
    let mut residual_positive = true;
    for i in 0..=CONVEXIFICATION_GRID {
        let m = lo + (hi - lo) * i as f64 / CONVEXIFICATION_GRID as f64;
        if m.abs() >= 1.0 {
            continue;
        }
        if !(m > cw.field_argument(Some(&spec), m)?.tanh()) {
            residual_positive = false;
            break;
        }
    }
    Ok(ConvexificationReport {
        threshold_between_wells,
        threshold_below_peak,
        interval_left_of_saddle,
        residual_positive,
        interval: Some((a, b)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_model() -> CurieWeiss {
        CurieWeiss::new(1.5, -0.05).unwrap()
    }

    #[test]
    fn two_spin_chain_matches_enumeration() {
        let cw = reference_model();
        let chain = build_magnetization_generator(&cw, &Variant::Classical, 2).unwrap();
        // Spin configurations: ++ (m = 1), +- and -+ (m = 0), -- (m = -1).
        let w = |m: f64| (-cw.beta * 2.0 * cw.energy(m).unwrap()).exp();
        let z = w(1.0) + 2.0 * w(0.0) + w(-1.0);
        let expected = [w(-1.0) / z, 2.0 * w(0.0) / z, w(1.0) / z];
        for (p, e) in chain.generator.stationary().iter().zip(expected) {
            assert!((p - e).abs() < 1e-14);
        }
        assert_eq!(chain.generator.rate(2, 3.min(2)), -chain.generator.exit_rate(2));
        assert!(chain.generator.log_rate(2, 3).is_none());
    }

    #[test]
    fn top_state_has_no_up_move() {
        let chain = build_magnetization_generator(&reference_model(), &Variant::linear(-0.2), 10).unwrap();
        assert_eq!(chain.generator.transitions(10).len(), 1);
        assert_eq!(chain.generator.transitions(10)[0].to, 9);
    }

    #[test]
    fn nearest_point_ties_go_down() {
        assert_eq!(nearest_grid_index(0.05, 20), 10);
        assert_eq!(nearest_grid_index(0.06, 20), 11);
        assert_eq!(nearest_grid_index(0.1, 10), 5);
        assert_eq!(nearest_grid_index(-1.0, 10), 0);
        assert_eq!(nearest_grid_index(1.0, 10), 10);
    }

    #[test]
    fn stationary_law_is_finite_n_free_energy() {
        let cw = reference_model();
        let v = Variant::linear(-0.2);
        let n = 30;
        let chain = build_magnetization_generator(&cw, &v, n).unwrap();
        let lp = chain.generator.log_stationary();
        let g0 = cw.free_energy_finite(&v, chain.grid[0], n).unwrap();
        for k in 1..=n {
            let g = cw.free_energy_finite(&v, chain.grid[k], n).unwrap();
            let expect = -(n as f64) * (g - g0);
            assert!((lp[k] - lp[0] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn convexification_hypotheses() {
        let cw = reference_model();
        let ok = convexification_check(&cw, &Family::Linear, -0.4).unwrap();
        assert!(ok.all_pass(), "{ok:?}");
        let (_, _, z) = classical_wells(&cw).unwrap();
        let high = convexification_check(&cw, &Family::Linear, cw.energy(z).unwrap()).unwrap();
        assert!(!high.threshold_between_wells);
        let low = convexification_check(&cw, &Family::Linear, -0.45).unwrap();
        assert!(!low.threshold_between_wells);
        assert!(convexification_check(&CurieWeiss::new(0.9, -0.05).unwrap(), &Family::Linear, -0.4).is_err());
    }

    #[test]
    fn eyring_kramers_ratio_at_moderate_n() {
        let c = crossover_time(&reference_model(), &Variant::Classical, 200).unwrap();
        let ratio = (c.log_exact - c.log_eyring_kramers.unwrap()).exp();
        assert!((ratio - 1.0).abs() < 0.15, "{ratio}");
    }

    #[test]
    fn convexified_chain_has_no_kramers_estimate() {
        let c = crossover_time(&reference_model(), &Variant::linear(-0.4), 100).unwrap();
        assert!(c.log_eyring_kramers.is_none());
        assert!(c.log_exact.is_finite());
    }
}

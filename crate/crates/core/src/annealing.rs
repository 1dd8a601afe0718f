//! Simulated annealing with landscape modification under logarithmic cooling.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::analysis::{critical_heights, minimax_elevation, critical_height_classical};
use crate::chain::{replica_rng, FiniteLandscape, MAX_JUMPS};
use crate::error::{Error, Result};
use crate::stats::{log_sum_exp, wilson_interval};
use crate::transform::{Family, TransformSpec};

/// z-score of the reported confidence bands.
pub const BAND_Z: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// Height is the clipped critical height `c*`.
    Improved,
    /// Height is the classical critical height `H⁰`.
    Classical,
    /// Constant temperature `height + slack`.
    Fixed,
}

/// `ε_t = (height + slack) / ln(t + 1)`, with `β_0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingSchedule {
    pub kind: ScheduleKind,
    pub height: f64,
    pub slack: f64,
}

impl CoolingSchedule {
    pub fn new(kind: ScheduleKind, height: f64, slack: f64) -> Result<Self> {
        if !(height >= 0.0) || !height.is_finite() {
            return Err(Error::Config(format!("schedule height must be finite and >= 0, got {height}")));
        }
        if !(slack > 0.0) || !slack.is_finite() {
            return Err(Error::Config(format!("schedule slack must be positive, got {slack}")));
        }
        Ok(Self { kind, height, slack })
    }

    /// Schedule driven by the clipped critical height of `spec` on `land`.
    pub fn improved(land: &FiniteLandscape, spec: &TransformSpec, slack: f64) -> Result<Self> {
        Self::new(ScheduleKind::Improved, critical_heights(land, spec)?.c_star, slack)
    }

    pub fn classical(land: &FiniteLandscape, slack: f64) -> Result<Self> {
        let table = minimax_elevation(land)?;
        Self::new(ScheduleKind::Classical, critical_height_classical(land, &table), slack)
    }

    pub fn fixed(epsilon: f64) -> Result<Self> {
        Self::new(ScheduleKind::Fixed, 0.0, epsilon)
    }

    /// Temperature at time `t`; infinite at `t = 0`.
    pub fn epsilon(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Argument(format!("time must be >= 0, got {t}")));
        }
        let scale = self.height + self.slack;
        Ok(match self.kind {
            ScheduleKind::Fixed => scale,
            _ if t == 0.0 => f64::INFINITY,
            _ => scale / t.ln_1p(),
        })
    }

    pub fn beta(&self, t: f64) -> Result<f64> {
        Ok(1.0 / self.epsilon(t)?)
    }
}

/// How the threshold `c` evolves along a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy {
    Fixed(f64),
    /// Least energy seen so far, starting from `H(x0)`; updated at jumps.
    RunningMinimum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConstants {
    pub m: f64,
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub k: f64,
    pub eps_bar: f64,
    /// `min (H(x) − c)` over states above `c`; `None` when `c ≥ max H`.
    pub delta: Option<f64>,
    /// Least energy above the ground level.
    pub d_low: f64,
    pub c_star: f64,
    pub mu_min: f64,
    /// Time after which the tail envelope applies: `e^{1/ε̄} − 1`.
    pub threshold_time: f64,
}

/// Evaluates the constant bundle of the convergence bound, with the unknown
/// spectral constant set to 1.
pub fn schedule_constants(land: &FiniteLandscape, spec: &TransformSpec, slack: f64) -> Result<ScheduleConstants> {
    let (h_min, h_max) = (land.h_min(), land.h_max());
    let m = h_max - h_min;
    if !(m > 0.0) {
        return Err(Error::Precondition("constant energy: nothing to optimize".into()));
    }
    let c = spec.threshold();
    let upper = m + h_max - c;
    if !(slack > 0.0 && slack < upper) {
        return Err(Error::Precondition(format!("slack {slack} must lie in (0, {upper})")));
    }
    let p = 2.0 * m / (m + h_max - slack - c);
    if !(p > 2.0) {
        return Err(Error::Precondition(format!(
            "slack {slack} gives p = {p}; need slack > max H - c = {}",
            h_max - c
        )));
    }
    let eps_bar = (p - 2.0) / p;
    let mu_min = land.mu().iter().copied().fold(f64::INFINITY, f64::min);
    let delta = land
        .energies()
        .iter()
        .filter(|&&h| h > c)
        .map(|&h| h - c)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    let base = mu_min.powf(-eps_bar);
    let a = match delta {
        Some(d) if c < h_max => base * (m / spec.family().eval(d)).exp(),
        _ => base,
    };
    let c_star = critical_heights(land, spec)?.c_star;
    let b = 6.0 * m / (c_star + slack);
    let k = 4.0 * (1.0 + 2.0 * a * b) / -(-1.0 / (2.0 * a) - b).exp_m1();
    let d_low = land
        .energies()
        .iter()
        .copied()
        .filter(|&h| h != h_min)
        .fold(f64::INFINITY, f64::min);
    Ok(ScheduleConstants {
        m,
        p,
        a,
        b,
        k,
        eps_bar,
        delta,
        d_low,
        c_star,
        mu_min,
        threshold_time: (1.0 / eps_bar).exp_m1(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealResult {
    /// First time in the ground set; `None` if censored at the horizon.
    pub hit_time: Option<f64>,
    pub horizon: f64,
    /// Accepted jumps into each state.
    pub visits: Vec<u64>,
    /// Time spent in each state up to the hit (or horizon).
    pub occupation: Vec<f64>,
    /// `(time, c)` each time the running-minimum threshold drops.
    pub threshold_path: Vec<(f64, f64)>,
    pub seed: u64,
    pub replica: u64,
}

impl AnnealResult {
    pub fn censored(&self) -> bool {
        self.hit_time.is_none()
    }
}

fn check_start(land: &FiniteLandscape, x0: usize, horizon: f64) -> Result<()> {
    if x0 >= land.n() {
        return Err(Error::Argument(format!("start state {x0} out of range")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Argument(format!("horizon must be positive, got {horizon}")));
    }
    Ok(())
}

/// One run of the time-inhomogeneous chain, simulated by thinning against the
/// total proposal rate. With `stop_on_hit` the run ends on reaching the ground set.
#[allow(clippy::too_many_arguments)]
pub fn anneal_run(
    land: &FiniteLandscape,
    family: &Family,
    policy: ThresholdPolicy,
    sched: &CoolingSchedule,
    x0: usize,
    horizon: f64,
    seed: u64,
    replica: u64,
    stop_on_hit: bool,
) -> Result<AnnealResult> {
    check_start(land, x0, horizon)?;
    let n = land.n();
    let h_min = land.h_min();
    let mut rng = replica_rng(seed, replica);
    let mut x = x0;
    let mut t = 0.0;
    let mut c = match policy {
        ThresholdPolicy::Fixed(c) => c,
        ThresholdPolicy::RunningMinimum => land.energy(x0),
    };
    let mut res = AnnealResult {
        hit_time: None,
        horizon,
        visits: vec![0; n],
        occupation: vec![0.0; n],
        threshold_path: Vec::new(),
        seed,
        replica,
    };
    if land.energy(x0) == h_min {
        res.hit_time = Some(0.0);
        if stop_on_hit {
            return Ok(res);
        }
    }
    let mut events = 0u64;
    loop {
        let out = land.out_rate(x);
        let dt = Exp::new(out)
            .map_err(|e| Error::numerical("anneal_run", e.to_string()))?
            .sample(&mut rng);
        let s = t + dt;
        if s >= horizon {
            res.occupation[x] += horizon - t;
            return Ok(res);
        }
        res.occupation[x] += dt;
        t = s;
        events += 1;
        if events > MAX_JUMPS {
            return Err(Error::numerical("anneal_run", format!("more than {MAX_JUMPS} proposals")));
        }
        let mut u = rng.gen::<f64>() * out;
        let mut y = land.neighbors(x)[0].0;
        for &(z, q) in land.neighbors(x) {
            y = z;
            if u < q {
                break;
            }
            u -= q;
        }
        let eps = sched.epsilon(t)?;
        let accept = if eps.is_infinite() || land.energy(y) <= land.energy(x) {
            true
        } else {
            let spec = TransformSpec::new(family.clone(), c, eps.max(crate::transform::MIN_EPSILON))?;
            rng.gen::<f64>() < spec.acceptance(land.energy(x), land.energy(y))?
        };
        if !accept {
            continue;
        }
        x = y;
        res.visits[x] += 1;
        if policy == ThresholdPolicy::RunningMinimum && land.energy(x) < c {
            c = land.energy(x);
            res.threshold_path.push((t, c));
        }
        if res.hit_time.is_none() && land.energy(x) == h_min {
            res.hit_time = Some(t);
            if stop_on_hit {
                return Ok(res);
            }
        }
    }
}

/// Run until the ground set is hit or the horizon passes.
#[allow(clippy::too_many_arguments)]
pub fn simulate_annealing(
    land: &FiniteLandscape,
    family: &Family,
    policy: ThresholdPolicy,
    sched: &CoolingSchedule,
    x0: usize,
    horizon: f64,
    seed: u64,
) -> Result<AnnealResult> {
    anneal_run(land, family, policy, sched, x0, horizon, seed, 0, true)
}

/// Exact mass outside the ground set and its upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsTail {
    pub exact: f64,
    pub bound: f64,
}

/// `π^f_{ε,c}(X ∖ S_min)` by direct summation, with the two-branch bound.
/// `epsilon = ∞` is the infinite-temperature law `μ`.
pub fn gibbs_tail(land: &FiniteLandscape, spec: &TransformSpec, epsilon: f64) -> Result<GibbsTail> {
    let h_min = land.h_min();
    let mu_ground: f64 = (0..land.n())
        .filter(|&x| land.energy(x) == h_min)
        .map(|x| land.mu()[x])
        .sum();
    if epsilon.is_infinite() {
        return Ok(GibbsTail {
            exact: 1.0 - mu_ground,
            bound: 1.0 / mu_ground,
        });
    }
    let spec = spec.with_epsilon(epsilon)?;
    let mut all = Vec::with_capacity(land.n());
    let mut upper = Vec::new();
    for x in 0..land.n() {
        let w = land.mu()[x].ln() - spec.gap(h_min, land.energy(x))?;
        all.push(w);
        if land.energy(x) != h_min {
            upper.push(w);
        }
    }
    if upper.is_empty() {
        return Ok(GibbsTail { exact: 0.0, bound: 0.0 });
    }
    let exact = (log_sum_exp(&upper) - log_sum_exp(&all)).exp();
    let d_low = land
        .energies()
        .iter()
        .copied()
        .filter(|&h| h != h_min)
        .fold(f64::INFINITY, f64::min);
    let c = spec.threshold();
    let exponent = if c >= d_low {
        (d_low - h_min) / epsilon
    } else if c >= h_min {
        spec.gap(c, d_low)?
    } else {
        spec.gap(h_min, d_low)?
    };
    Ok(GibbsTail {
        exact,
        bound: (-exponent).exp() / mu_ground,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    pub t: f64,
    /// Empirical `P(τ > t)`.
    pub empirical: f64,
    pub std_error: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// Bound with the unknown constant set to 1; infinite when undefined.
    pub envelope: f64,
    pub epsilon_t: f64,
    /// Whether `t` is past the time from which the envelope is claimed.
    pub bound_applies: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessCurve {
    pub points: Vec<TailPoint>,
    pub reps: usize,
    pub seed: u64,
    pub constants: Option<ScheduleConstants>,
}

impl SuccessCurve {
    /// Grid points where the empirical tail exceeds an envelope `≤ 1`.
    pub fn envelope_violations(&self) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| p.envelope <= 1.0 && p.wilson_low > p.envelope)
            .map(|p| p.t)
            .collect()
    }
}

/// Empirical tail of the hitting time of the ground set over `reps` replicas,
/// with confidence bands and the theoretical envelope.
#[allow(clippy::too_many_arguments)]
pub fn success_probability(
    land: &FiniteLandscape,
    spec: &TransformSpec,
    policy: ThresholdPolicy,
    sched: &CoolingSchedule,
    x0: usize,
    t_grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<SuccessCurve> {
    if reps == 0 {
        return Err(Error::Argument("need at least one replica".into()));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[0] < w[1])) || !(t_grid[0] >= 0.0) {
        return Err(Error::Argument("time grid must be non-empty, non-negative and increasing".into()));
    }
    if x0 < land.n() && land.energy(x0) == land.h_min() {
        return Err(Error::Precondition(format!("start state {x0} is already a ground state")));
    }
    let horizon = *t_grid.last().unwrap_or(&0.0);
    let horizon = if horizon > 0.0 { horizon } else { 1.0 };
    let hits = (0..reps as u64)
        .into_par_iter()
        .map(|r| anneal_run(land, spec.family(), policy, sched, x0, horizon, seed, r, true).map(|a| a.hit_time))
        .collect::<Result<Vec<_>>>()?;
    let constants = match sched.kind {
        ScheduleKind::Fixed => None,
        _ => schedule_constants(land, spec, sched.slack).ok(),
    };
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let k = hits.iter().filter(|h| h.map_or(true, |s| s > t)).count();
        let p = k as f64 / reps as f64;
        let (lo, hi) = wilson_interval(k, reps, BAND_Z);
        let eps = sched.epsilon(t)?;
        let (envelope, bound_applies) = match &constants {
            Some(k) => {
                let tail = gibbs_tail(land, spec, eps)?.exact;
                let factor = 1.0 + k.k.powf(1.0 / (2.0 * k.eps_bar));
                let env = factor * tail.sqrt() + tail;
                (if env.is_nan() { f64::INFINITY } else { env }, t >= k.threshold_time)
            }
            None => (f64::INFINITY, false),
        };
        points.push(TailPoint {
            t,
            empirical: p,
            std_error: (p * (1.0 - p) / reps as f64).sqrt(),
            wilson_low: lo,
            wilson_high: hi,
            envelope,
            epsilon_t: eps,
            bound_applies,
        });
    }
    Ok(SuccessCurve {
        points,
        reps,
        seed,
        constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::critical_heights;

    fn double_well() -> FiniteLandscape {
        FiniteLandscape::path(vec![2.0, 1.0, 2.5, 4.0, 2.0, 0.0, 1.5]).unwrap()
    }

    #[test]
    fn schedule_values() {
        let s = CoolingSchedule::new(ScheduleKind::Improved, 2.0, 0.5).unwrap();
        assert!((s.epsilon(1f64.exp() - 1.0).unwrap() - 2.5).abs() < 1e-15);
        assert_eq!(s.beta(0.0).unwrap(), 0.0);
        assert!((s.epsilon(5f64.exp() - 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!(s.epsilon(-1.0).is_err());
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let e = s.epsilon(i as f64 * 0.37).unwrap();
            assert!(e < prev);
            prev = e;
        }
        assert_eq!(CoolingSchedule::fixed(0.7).unwrap().epsilon(0.0).unwrap(), 0.7);
    }

    #[test]
    fn constants_at_top_threshold() {
        let land = double_well();
        let spec = TransformSpec::new(Family::Linear, 4.0, 1.0).unwrap();
        let k = schedule_constants(&land, &spec, 3.0).unwrap();
        assert_eq!(k.m, 4.0);
        assert!((k.p - 8.0 / 1.0).abs() < 1e-15);
        assert!((k.a - k.mu_min.powf(-(k.p - 2.0) / k.p)).abs() < 1e-12 * k.a);
        assert_eq!(k.delta, None);
        assert_eq!(k.d_low, 1.0);
        assert!(k.k > 0.0);
    }

    #[test]
    fn constants_below_top() {
        let land = double_well();
        let spec = TransformSpec::new(Family::Linear, 1.0, 1.0).unwrap();
        let k = schedule_constants(&land, &spec, 3.5).unwrap();
        assert_eq!(k.delta, Some(0.5));
        let base = k.mu_min.powf(-k.eps_bar);
        assert!((k.a - base * (4.0f64 / 0.5).exp()).abs() < 1e-9 * k.a);
        assert!((k.b - 6.0 * 4.0 / (k.c_star + 3.5)).abs() < 1e-12);
        assert!(schedule_constants(&land, &spec, 2.9).is_err());
        assert!(schedule_constants(&land, &spec, 7.0).is_err());
        let flat = FiniteLandscape::path(vec![1.0, 1.0]).unwrap();
        assert!(schedule_constants(&flat, &spec, 0.5).is_err());
    }

    #[test]
    fn p_approaches_two_at_lower_slack_edge() {
        let land = double_well();
        let spec = TransformSpec::new(Family::Linear, 1.0, 1.0).unwrap();
        let k = schedule_constants(&land, &spec, 3.0 + 1e-9).unwrap();
        assert!(k.p > 2.0 && k.p < 2.0 + 1e-8);
        assert!(k.eps_bar < 1e-8);
    }

    #[test]
    fn two_state_gibbs_tail() {
        let land = FiniteLandscape::path(vec![0.0, 1.0]).unwrap();
        let spec = TransformSpec::classical(1.0).unwrap();
        let g = gibbs_tail(&land, &spec, 1.0 / 2f64.ln()).unwrap();
        assert!((g.exact - 1.0 / 3.0).abs() < 1e-15);
        assert!(g.exact <= g.bound);
        let inf = gibbs_tail(&land, &spec, f64::INFINITY).unwrap();
        assert_eq!(inf.exact, 0.5);
    }

    #[test]
    fn energy_scaled_stays_in_range() {
        let land = double_well();
        let spec = TransformSpec::new(Family::Linear, 1.0, 1.0).unwrap();
        let c_star = critical_heights(&land, &spec).unwrap().c_star;
        let sched = CoolingSchedule::new(ScheduleKind::Improved, c_star, 3.5).unwrap();
        let m = 4.0;
        let scaled = |t: f64, x: usize| -> f64 {
            let e = sched.epsilon(t).unwrap();
            e * spec.with_epsilon(e).unwrap().gap(0.0, land.energy(x)).unwrap()
        };
        let consts = schedule_constants(&land, &spec, 3.5).unwrap();
        for i in 1..400 {
            let t = 0.05 * 1.03f64.powi(i);
            let (beta, h) = (sched.beta(t).unwrap(), 1e-6 * t);
            let dbeta = (sched.beta(t + h).unwrap() - sched.beta(t - h).unwrap()) / (2.0 * h);
            let mut r = f64::NEG_INFINITY;
            for x in 0..land.n() {
                let v = scaled(t, x);
                assert!((0.0..=m * (1.0 + 1e-12)).contains(&v));
                r = r.max((scaled(t + h, x) - scaled(t - h, x)) / (2.0 * h));
            }
            assert!(dbeta * m + beta * r <= consts.b / (2.0 * (1.0 + t)) * (1.0 + 1e-6));
        }
    }

    #[test]
    fn annealing_is_deterministic() {
        let land = double_well();
        let sched = CoolingSchedule::new(ScheduleKind::Improved, 0.0, 1.0).unwrap();
        let a = simulate_annealing(&land, &Family::Linear, ThresholdPolicy::RunningMinimum, &sched, 1, 500.0, 9).unwrap();
        let b = simulate_annealing(&land, &Family::Linear, ThresholdPolicy::RunningMinimum, &sched, 1, 500.0, 9).unwrap();
        assert_eq!(a, b);
        if let Some(t) = a.hit_time {
            assert!(t <= a.horizon);
        }
        assert!(a.threshold_path.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn hot_schedule_follows_proposal_law() {
        let land = double_well();
        let sched = CoolingSchedule::fixed(1e12).unwrap();
        let reps = 700;
        let occ: Vec<Vec<f64>> = (0..reps)
            .map(|r| {
                anneal_run(&land, &Family::Zero, ThresholdPolicy::Fixed(0.0), &sched, r as usize % 7, 200.0, 3, r, false)
                    .unwrap()
                    .occupation
            })
            .collect();
        for x in 0..land.n() {
            let fr: Vec<f64> = occ.iter().map(|o| o[x] / 200.0).collect();
            let (m, se) = crate::stats::mean_and_stderr(&fr);
            assert!((m - land.mu()[x]).abs() < 3.0 * se + 1e-3, "state {x}: {m} ± {se}");
        }
    }
}

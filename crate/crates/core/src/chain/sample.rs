use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::chain::Generator;
use crate::error::{Error, Result};
use crate::stats::mean_and_stderr;

/// Jump times hit by a single replica before giving up.
pub const MAX_JUMPS: u64 = 2_000_000_000;

/// RNG for replica `replica` of a run seeded with `seed`: one ChaCha stream per replica.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Piecewise-constant path: `(time of entry, state)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub jumps: Vec<(f64, usize)>,
    pub horizon: f64,
}

impl Trajectory {
    /// Time spent in each state over `[0, horizon]`.
    pub fn occupation(&self, n: usize) -> Vec<f64> {
        let mut occ = vec![0.0; n];
        for (i, &(t, x)) in self.jumps.iter().enumerate() {
            let end = self.jumps.get(i + 1).map_or(self.horizon, |j| j.0);
            occ[x] += end - t;
        }
        occ
    }
}

/// Draw the next state out of `x`; `None` when `x` is absorbing.
pub(crate) fn jump<R: Rng>(gen: &Generator, x: usize, rng: &mut R) -> Option<(f64, usize)> {
    let total = gen.exit_rate(x);
    if total <= 0.0 {
        return None;
    }
    let hold: f64 = Exp1.sample(rng);
    let mut u = rng.gen::<f64>() * total;
    let trs = gen.transitions(x);
    let mut next = trs.last()?.to;
    for t in trs {
        if u < t.rate {
            next = t.to;
            break;
        }
        u -= t.rate;
    }
    Some((hold / total, next))
}

/// Jump-chain simulation up to `horizon`. Deterministic in `seed`.
pub fn simulate_ctmc(gen: &Generator, x0: usize, horizon: f64, seed: u64) -> Result<Trajectory> {
    if x0 >= gen.n() {
        return Err(Error::Argument(format!("start state {x0} out of range")));
    }
    if !(horizon > 0.0) {
        return Err(Error::Argument(format!("horizon must be positive, got {horizon}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jumps = vec![(0.0, x0)];
    let (mut t, mut x) = (0.0, x0);
    while let Some((dt, y)) = jump(gen, x, &mut rng) {
        t += dt;
        if t > horizon {
            break;
        }
        x = y;
        jumps.push((t, x));
    }
    Ok(Trajectory { jumps, horizon })
}

/// Mean of a Monte-Carlo hitting time with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingStats {
    pub mean: f64,
    pub std_error: f64,
    pub reps: usize,
    pub seed: u64,
}

/// One hitting time of `target` from `x0`.
pub fn sample_hitting_time<R: Rng>(gen: &Generator, x0: usize, in_target: &[bool], rng: &mut R) -> Result<f64> {
    let (mut t, mut x) = (0.0, x0);
    let mut count = 0u64;
    while !in_target[x] {
        let (dt, y) = jump(gen, x, rng)
            .ok_or_else(|| Error::Structure(format!("absorbing state {x} outside the target")))?;
        t += dt;
        x = y;
        count += 1;
        if count > MAX_JUMPS {
            return Err(Error::numerical("hitting_time_mc", "replica exceeded the jump budget"));
        }
    }
    Ok(t)
}

pub(crate) fn target_mask(n: usize, target: &[usize]) -> Result<Vec<bool>> {
    if target.is_empty() {
        return Err(Error::Argument("target set is empty".into()));
    }
    let mut mask = vec![false; n];
    for &y in target {
        if y >= n {
            return Err(Error::Argument(format!("target state {y} out of range")));
        }
        mask[y] = true;
    }
    Ok(mask)
}

/// Monte-Carlo mean of the first hitting time of `target` from `x0`.
///
/// Replica `r` draws from [`replica_rng`]`(seed, r)`; results do not depend on
/// the thread count.
pub fn hitting_time_mc(gen: &Generator, x0: usize, target: &[usize], reps: usize, seed: u64) -> Result<HittingStats> {
    if reps == 0 {
        return Err(Error::Argument("reps must be at least 1".into()));
    }
    if x0 >= gen.n() {
        return Err(Error::Argument(format!("start state {x0} out of range")));
    }
    let mask = target_mask(gen.n(), target)?;
    if mask[x0] {
        return Ok(HittingStats {
            mean: 0.0,
            std_error: 0.0,
            reps,
            seed,
        });
    }
    let times = (0..reps)
        .into_par_iter()
        .map(|r| sample_hitting_time(gen, x0, &mask, &mut replica_rng(seed, r as u64)))
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std_error) = mean_and_stderr(&times);
    Ok(HittingStats {
        mean,
        std_error,
        reps,
        seed,
    })
}

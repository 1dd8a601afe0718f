use std::collections::VecDeque;

use crate::chain::FiniteLandscape;
use crate::error::{Error, Result};
use crate::stats::log_sum_exp;
use crate::transform::TransformSpec;

const REVERSIBILITY_TOL: f64 = 1e-12;

/// One off-diagonal entry of a generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub to: usize,
    pub rate: f64,
    /// `ln rate`; kept separately so rates far below `f64::MIN_POSITIVE` stay usable.
    pub log_rate: f64,
}

/// A reversible continuous-time rate matrix with its stationary law.
#[derive(Debug, Clone)]
pub struct Generator {
    rows: Vec<Vec<Transition>>,
    exit: Vec<f64>,
    log_pi: Vec<f64>,
    pi: Vec<f64>,
}

impl Generator {
    /// Assemble from `(x, y, ln M(x, y))` and unnormalised log stationary weights.
    ///
    /// Checks reversibility `π(x)M(x,y) = π(y)M(y,x)` on every edge and
    /// irreducibility of the transition graph.
    pub fn from_log_rates(log_weights: &[f64], transitions: &[(usize, usize, f64)]) -> Result<Self> {
        let n = log_weights.len();
        if n == 0 {
            return Err(Error::Config("generator has no states".into()));
        }
        if log_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("stationary log-weights must be finite".into()));
        }
        let mut rows: Vec<Vec<Transition>> = vec![Vec::new(); n];
        for &(x, y, lr) in transitions {
            if x >= n || y >= n || x == y {
                return Err(Error::Config(format!("invalid transition ({x}, {y})")));
            }
            if lr.is_nan() || lr == f64::INFINITY {
                return Err(Error::Config(format!("log-rate of ({x}, {y}) is {lr}")));
            }
            if lr == f64::NEG_INFINITY {
                continue;
            }
            rows[x].push(Transition {
                to: y,
                rate: lr.exp(),
                log_rate: lr,
            });
        }
        for (x, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|t| t.to);
            if row.windows(2).any(|w| w[0].to == w[1].to) {
                return Err(Error::Config(format!("duplicate transition out of state {x}")));
            }
        }
        let norm = log_sum_exp(log_weights);
        let log_pi: Vec<f64> = log_weights.iter().map(|w| w - norm).collect();
        let pi = log_pi.iter().map(|l| l.exp()).collect();
        let exit = rows.iter().map(|r| r.iter().map(|t| t.rate).sum()).collect();
        let gen = Self {
            rows,
            exit,
            log_pi,
            pi,
        };
        gen.check_reversible()?;
        if !gen.is_irreducible() {
            return Err(Error::Config("transition graph is not connected".into()));
        }
        Ok(gen)
    }

    fn check_reversible(&self) -> Result<()> {
        for x in 0..self.n() {
            for t in &self.rows[x] {
                let back = self.log_rate(t.to, x).ok_or_else(|| {
                    Error::Structure(format!("transition ({x}, {}) has no reverse", t.to))
                })?;
                let a = self.log_pi[x] + t.log_rate;
                let b = self.log_pi[t.to] + back;
                if (a - b).abs() > REVERSIBILITY_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::Structure(format!(
                        "not reversible on ({x}, {}): log fluxes {a} vs {b}",
                        t.to
                    )));
                }
            }
        }
        Ok(())
    }

    fn is_irreducible(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for t in &self.rows[x] {
                if !seen[t.to] {
                    seen[t.to] = true;
                    count += 1;
                    queue.push_back(t.to);
                }
            }
        }
        count == n
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn transitions(&self, x: usize) -> &[Transition] {
        &self.rows[x]
    }

    pub fn rate(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return -self.exit[x];
        }
        self.find(x, y).map_or(0.0, |t| t.rate)
    }

    pub fn log_rate(&self, x: usize, y: usize) -> Option<f64> {
        self.find(x, y).map(|t| t.log_rate)
    }

    fn find(&self, x: usize, y: usize) -> Option<&Transition> {
        let row = &self.rows[x];
        row.binary_search_by_key(&y, |t| t.to).ok().map(|i| &row[i])
    }

    /// `|M(x, x)|`.
    pub fn exit_rate(&self, x: usize) -> f64 {
        self.exit[x]
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.exit.iter().copied().fold(0.0, f64::max)
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn log_stationary(&self) -> &[f64] {
        &self.log_pi
    }

    /// Row-major dense copy including the diagonal.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut m = vec![0.0; n * n];
        for x in 0..n {
            for t in &self.rows[x] {
                m[x * n + t.to] = t.rate;
            }
            m[x * n + x] = -self.exit[x];
        }
        m
    }

    /// Dense symmetric conductances `π(x)M(x, y) / max π`, computed from logs.
    pub fn conductances(&self) -> Vec<f64> {
        let n = self.n();
        let shift = self.log_pi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut c = vec![0.0; n * n];
        for x in 0..n {
            for t in &self.rows[x] {
                let y = t.to;
                if y > x {
                    let back = self.log_rate(y, x).unwrap_or(f64::NEG_INFINITY);
                    // Average both directions; they agree up to rounding.
                    let v = 0.5 * ((self.log_pi[x] + t.log_rate) + (self.log_pi[y] + back)) - shift;
                    let v = v.exp();
                    c[x * n + y] = v;
                    c[y * n + x] = v;
                }
            }
        }
        c
    }

    /// Ordering of the states along the path when the transition graph is a path.
    pub fn path_order(&self) -> Option<Vec<usize>> {
        let n = self.n();
        if n == 1 {
            return Some(vec![0]);
        }
        if self.rows.iter().any(|r| r.len() > 2 || r.is_empty()) {
            return None;
        }
        let start = (0..n).find(|&x| self.rows[x].len() == 1)?;
        let mut order = vec![start];
        let mut prev = usize::MAX;
        let mut cur = start;
        while order.len() < n {
            let next = self.rows[cur].iter().map(|t| t.to).find(|&y| y != prev)?;
            prev = cur;
            cur = next;
            order.push(cur);
        }
        let edges: usize = self.rows.iter().map(|r| r.len()).sum();
        (edges == 2 * (n - 1)).then_some(order)
    }
}

/// Metropolis–Hastings generator with landscape modification:
/// `M(x, y) = Q(x, y) · exp(−(H^f(y) − H^f(x))₊)`.
///
/// The stationary law is `π(x) ∝ exp(−H^f(x)) μ(x)` with `H^f` anchored at the
/// minimal energy.
pub fn build_mh_generator(land: &FiniteLandscape, spec: &TransformSpec) -> Result<Generator> {
    let n = land.n();
    let h_min = land.h_min();
    let mut log_weights = Vec::with_capacity(n);
    for x in 0..n {
        log_weights.push(land.mu()[x].ln() - spec.gap(h_min, land.energy(x))?);
    }
    let mut transitions = Vec::new();
    for (x, y, q) in land.edges() {
        let g = spec.gap(land.energy(x), land.energy(y))?;
        transitions.push((x, y, q.ln() - g.max(0.0)));
    }
    Generator::from_log_rates(&log_weights, &transitions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::Family;

    fn two_state() -> FiniteLandscape {
        FiniteLandscape::path(vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn classical_two_state_rates() {
        let g = build_mh_generator(&two_state(), &TransformSpec::classical(1.0).unwrap()).unwrap();
        assert!((g.rate(0, 1) - (-1f64).exp()).abs() < 1e-16);
        assert_eq!(g.rate(1, 0), 1.0);
        assert_eq!(g.rate(0, 0), -g.rate(0, 1));
    }

    #[test]
    fn linear_two_state_rates() {
        let spec = TransformSpec::new(Family::Linear, 0.0, 1.0).unwrap();
        let g = build_mh_generator(&two_state(), &spec).unwrap();
        assert!((g.rate(0, 1) - 0.5).abs() < 1e-15);
        assert_eq!(g.rate(1, 0), 1.0);
        let pi = g.stationary();
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn stationary_is_left_null_vector() {
        let land = FiniteLandscape::complete(vec![0.0, 0.7, 2.0, 1.1]).unwrap();
        let spec = TransformSpec::new(Family::SquareRoot, 0.5, 0.4).unwrap();
        let g = build_mh_generator(&land, &spec).unwrap();
        let m = g.to_dense();
        let pi = g.stationary();
        for y in 0..4 {
            let r: f64 = (0..4).map(|x| pi[x] * m[x * 4 + y]).sum();
            assert!(r.abs() < 1e-14);
        }
        for x in 0..4 {
            let s: f64 = (0..4).map(|y| m[x * 4 + y]).sum();
            assert!(s.abs() < 1e-14);
        }
    }

    #[test]
    fn survives_very_low_temperature() {
        let land = FiniteLandscape::path(vec![0.0, 3.0, 1.0]).unwrap();
        let g = build_mh_generator(&land, &TransformSpec::classical(1.0 / 1000.0).unwrap()).unwrap();
        assert_eq!(g.rate(0, 1), 0.0);
        assert!((g.log_rate(0, 1).unwrap() + 3000.0).abs() < 1e-9);
        assert!((g.log_stationary()[2] - g.log_stationary()[0] + 1000.0).abs() < 1e-9);
    }

    #[test]
    fn path_order_detects_birth_death() {
        let land = FiniteLandscape::from_pairs(
            vec![0.0; 4],
            vec![0.25; 4],
            &[(2, 0, 1.0), (0, 3, 1.0), (3, 1, 1.0)],
        )
        .unwrap();
        let g = build_mh_generator(&land, &TransformSpec::classical(1.0).unwrap()).unwrap();
        assert_eq!(g.path_order(), Some(vec![1, 3, 0, 2]));
        let complete = FiniteLandscape::complete(vec![0.0; 3]).unwrap();
        let g = build_mh_generator(&complete, &TransformSpec::classical(1.0).unwrap()).unwrap();
        assert_eq!(g.path_order(), None);
    }
}

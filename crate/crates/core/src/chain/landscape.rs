use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const BALANCE_TOL: f64 = 1e-12;

/// States, energies, a reversible proposal kernel and its invariant law `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteLandscape {
    energies: Vec<f64>,
    mu: Vec<f64>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl FiniteLandscape {
    /// Build from directed proposal rates. Both directions of every edge must be
    /// listed and satisfy `μ(x)Q(x,y) = μ(y)Q(y,x)`.
    pub fn new(energies: Vec<f64>, mu: Vec<f64>, rates: &[(usize, usize, f64)]) -> Result<Self> {
        let n = energies.len();
        if n == 0 {
            return Err(Error::Config("landscape has no states".into()));
        }
        if mu.len() != n {
            return Err(Error::Config(format!("mu has {} entries for {n} states", mu.len())));
        }
        if let Some(x) = energies.iter().position(|e| !e.is_finite()) {
            return Err(Error::Config(format!("energy of state {x} is not finite")));
        }
        if let Some(x) = mu.iter().position(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::Config(format!("mu({x}) = {} must be positive", mu[x])));
        }
        let total: f64 = mu.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("mu sums to {total}, not 1")));
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(x, y, q) in rates {
            if x >= n || y >= n {
                return Err(Error::Config(format!("edge ({x}, {y}) refers to a missing state")));
            }
            if x == y {
                return Err(Error::Config(format!("self-loop at state {x}")));
            }
            if !(q > 0.0) || !q.is_finite() {
                return Err(Error::Config(format!("rate Q({x}, {y}) = {q} must be positive")));
            }
            adj[x].push((y, q));
        }
        for (x, row) in adj.iter_mut().enumerate() {
            row.sort_by_key(|&(y, _)| y);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::Config(format!("edge ({x}, {}) listed twice", w[0].0)));
            }
        }
        let land = Self { energies, mu, adj };
        for x in 0..n {
            for &(y, q) in &land.adj[x] {
                let back = land.rate(y, x).ok_or_else(|| {
                    Error::Config(format!("edge ({x}, {y}) has no reverse edge ({y}, {x})"))
                })?;
                let (a, b) = (land.mu[x] * q, land.mu[y] * back);
                if (a - b).abs() > BALANCE_TOL * a.max(b) {
                    return Err(Error::Config(format!(
                        "proposal violates detailed balance on ({x}, {y}): {a} vs {b}"
                    )));
                }
            }
        }
        if !land.is_connected() {
            return Err(Error::Config("proposal graph is not connected".into()));
        }
        Ok(land)
    }

    /// Build from undirected pairs `(x, y, Q(x, y))`; the reverse rate is filled in
    /// from detailed balance.
    pub fn from_pairs(energies: Vec<f64>, mu: Vec<f64>, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        let n = mu.len();
        let mut rates = Vec::with_capacity(2 * pairs.len());
        for &(x, y, q) in pairs {
            if x >= n || y >= n {
                return Err(Error::Config(format!("edge ({x}, {y}) refers to a missing state")));
            }
            rates.push((x, y, q));
            rates.push((y, x, mu[x] * q / mu[y]));
        }
        Self::new(energies, mu, &rates)
    }

    /// Path `0 – 1 – … – n−1` with unit rates and uniform `μ`.
    pub fn path(energies: Vec<f64>) -> Result<Self> {
        let n = energies.len();
        let pairs: Vec<_> = (1..n).map(|x| (x - 1, x, 1.0)).collect();
        Self::from_pairs(energies, vec![1.0 / n as f64; n], &pairs)
    }

    /// Complete graph with unit rates and uniform `μ`.
    pub fn complete(energies: Vec<f64>) -> Result<Self> {
        let n = energies.len();
        let mut pairs = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                pairs.push((x, y, 1.0));
            }
        }
        Self::from_pairs(energies, vec![1.0 / n as f64; n], &pairs)
    }

    /// `rows × cols` grid with 4-neighbour unit rates and uniform `μ`; state `r * cols + c`.
    pub fn grid(rows: usize, cols: usize, energies: Vec<f64>) -> Result<Self> {
        if rows * cols != energies.len() {
            return Err(Error::Config(format!(
                "grid {rows}x{cols} needs {} energies, got {}",
                rows * cols,
                energies.len()
            )));
        }
        let mut pairs = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let x = r * cols + c;
                if c + 1 < cols {
                    pairs.push((x, x + 1, 1.0));
                }
                if r + 1 < rows {
                    pairs.push((x, x + cols, 1.0));
                }
            }
        }
        let n = energies.len();
        Self::from_pairs(energies, vec![1.0 / n as f64; n], &pairs)
    }

    pub fn n(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, x: usize) -> f64 {
        self.energies[x]
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Proposal neighbours of `x` with rates, sorted by state index.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adj[x]
    }

    pub fn rate(&self, x: usize, y: usize) -> Option<f64> {
        self.adj[x]
            .binary_search_by_key(&y, |&(z, _)| z)
            .ok()
            .map(|i| self.adj[x][i].1)
    }

    /// Total proposal rate out of `x`.
    pub fn out_rate(&self, x: usize) -> f64 {
        self.adj[x].iter().map(|&(_, q)| q).sum()
    }

    pub fn h_min(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn h_max(&self) -> f64 {
        self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// States of minimal energy, `S_min`.
    pub fn minimizers(&self) -> Vec<usize> {
        let m = self.h_min();
        (0..self.n()).filter(|&x| self.energies[x] == m).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().map(move |&(y, q)| (x, y, q)))
    }

    fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == n
    }

    /// Parse the plain-text format: a line with `n`, then `n` lines
    /// `index energy mu`, then any number of `x y rate` edge lines.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (ln, header) = lines.next().ok_or_else(|| err(1, "empty landscape file".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| err(ln, format!("expected state count, got `{header}`")))?;
        let mut energies = vec![f64::NAN; n];
        let mut mu = vec![f64::NAN; n];
        for _ in 0..n {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| err(ln, format!("expected {n} state lines")))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(ln, format!("expected `index energy mu`, got `{l}`")));
            }
            let i: usize = f[0].parse().map_err(|_| err(ln, format!("bad index `{}`", f[0])))?;
            if i >= n || !energies[i].is_nan() {
                return Err(err(ln, format!("state index {i} out of range or repeated")));
            }
            energies[i] = f[1].parse().map_err(|_| err(ln, format!("bad energy `{}`", f[1])))?;
            mu[i] = f[2].parse().map_err(|_| err(ln, format!("bad mu `{}`", f[2])))?;
        }
        let mut rates = Vec::new();
        for (ln, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(ln, format!("expected `x y rate`, got `{l}`")));
            }
            let x: usize = f[0].parse().map_err(|_| err(ln, format!("bad state `{}`", f[0])))?;
            let y: usize = f[1].parse().map_err(|_| err(ln, format!("bad state `{}`", f[1])))?;
            let q: f64 = f[2].parse().map_err(|_| err(ln, format!("bad rate `{}`", f[2])))?;
            rates.push((x, y, q));
        }
        Self::new(energies, mu, &rates)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n());
        for x in 0..self.n() {
            let _ = writeln!(s, "{x} {:e} {:e}", self.energies[x], self.mu[x]);
        }
        for (x, y, q) in self.edges() {
            let _ = writeln!(s, "{x} {y} {q:e}");
        }
        s
    }
}

impl std::str::FromStr for FiniteLandscape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, &PathBuf::from("<string>"))
    }
}

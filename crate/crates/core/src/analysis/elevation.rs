use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::chain::FiniteLandscape;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Key(f64);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Single-source bottleneck search: for every `y`, the least possible highest node
/// energy on a path from `src` to `y`, plus the predecessor on a witness path.
///
/// `neighbors(x, push)` must call `push(y)` for every neighbour of `x`.
pub fn bottleneck_from<F>(energies: &[f64], src: usize, mut neighbors: F) -> (Vec<f64>, Vec<usize>)
where
    F: FnMut(usize, &mut dyn FnMut(usize)),
{
    let n = energies.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src] = energies[src];
    pred[src] = src;
    heap.push(Reverse((Key(dist[src]), src)));
    let mut frontier = Vec::new();
    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        frontier.clear();
        neighbors(u, &mut |v| frontier.push(v));
        for &v in &frontier {
            if done[v] {
                continue;
            }
            let cand = d.max(energies[v]);
            if cand < dist[v] {
                dist[v] = cand;
                pred[v] = u;
                heap.push(Reverse((Key(cand), v)));
            }
        }
    }
    (dist, pred)
}

/// All-pairs minimax elevations `G⁰(x, y)` with witness paths.
#[derive(Debug, Clone)]
pub struct ElevationTable {
    n: usize,
    g0: Vec<f64>,
    pred: Vec<usize>,
}

impl ElevationTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.g0[x * self.n + y]
    }

    /// A path from `x` to `y` attaining `G⁰(x, y)`.
    pub fn path(&self, x: usize, y: usize) -> Vec<usize> {
        let mut p = vec![y];
        let mut cur = y;
        while cur != x {
            cur = self.pred[x * self.n + cur];
            p.push(cur);
        }
        p.reverse();
        p
    }

    /// Largest elevation over all pairs.
    pub fn max_elevation(&self) -> f64 {
        self.g0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn minimax_elevation(land: &FiniteLandscape) -> Result<ElevationTable> {
    let n = land.n();
    let mut g0 = vec![0.0; n * n];
    let mut pred = vec![0; n * n];
    for x in 0..n {
        let (d, p) = bottleneck_from(land.energies(), x, |u, push| {
            for &(v, _) in land.neighbors(u) {
                push(v);
            }
        });
        if d.iter().any(|v| v.is_infinite()) {
            return Err(Error::Config("proposal graph is not connected".into()));
        }
        g0[x * n..(x + 1) * n].copy_from_slice(&d);
        pred[x * n..(x + 1) * n].copy_from_slice(&p);
    }
    // Bottleneck values are symmetric in exact arithmetic; make it literal.
    for x in 0..n {
        for y in x + 1..n {
            let v = g0[x * n + y].max(g0[y * n + x]);
            g0[x * n + y] = v;
            g0[y * n + x] = v;
        }
    }
    Ok(ElevationTable { n, g0, pred })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_barrier() {
        let l = FiniteLandscape::path(vec![0.0, 2.0, 1.0]).unwrap();
        let t = minimax_elevation(&l).unwrap();
        assert_eq!(t.get(0, 2), 2.0);
        assert_eq!(t.get(1, 1), 2.0);
        assert_eq!(t.path(0, 2), vec![0, 1, 2]);
    }

    #[test]
    fn complete_graph_is_pairwise_max() {
        let e = vec![0.3, -1.0, 2.0, 0.5];
        let l = FiniteLandscape::complete(e.clone()).unwrap();
        let t = minimax_elevation(&l).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                assert_eq!(t.get(x, y), e[x].max(e[y]));
            }
        }
    }

    #[test]
    fn witness_path_attains_elevation() {
        let e: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64).collect();
        let l = FiniteLandscape::grid(4, 4, e.clone()).unwrap();
        let t = minimax_elevation(&l).unwrap();
        let p = t.path(0, 15);
        let top = p.iter().map(|&s| e[s]).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(top, t.get(0, 15));
    }
}

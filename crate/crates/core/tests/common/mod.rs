#![allow(dead_code)]

use std::sync::Arc;

use proptest::prelude::*;

use landmod::chain::{build_mh_generator, FiniteLandscape, Generator};
use landmod::curie_weiss::{CurieWeiss, Variant};
use landmod::transform::{Family, TransformSpec};

/// Minimax elevation by enumerating every simple path.
pub fn exhaustive_elevation(land: &FiniteLandscape) -> Vec<f64> {
    let n = land.n();
    let mut best = vec![f64::INFINITY; n * n];
    for src in 0..n {
        let mut on_path = vec![false; n];
        dfs(land, src, src, land.energy(src), &mut on_path, &mut best);
    }
    best
}

fn dfs(land: &FiniteLandscape, src: usize, x: usize, peak: f64, on_path: &mut [bool], best: &mut [f64]) {
    let n = land.n();
    on_path[x] = true;
    if peak < best[src * n + x] {
        best[src * n + x] = peak;
    }
    for &(y, _) in land.neighbors(x) {
        if !on_path[y] {
            dfs(land, src, y, peak.max(land.energy(y)), on_path, best);
        }
    }
    on_path[x] = false;
}

pub fn oracle_h0(land: &FiniteLandscape) -> f64 {
    oracle_c_star(land, f64::INFINITY)
}

/// Clipped critical height from the exhaustive elevations; `c` is clamped to the energy range.
pub fn oracle_c_star(land: &FiniteLandscape, c: f64) -> f64 {
    let g = exhaustive_elevation(land);
    let n = land.n();
    let e = land.energies();
    let h_min = e.iter().copied().fold(f64::INFINITY, f64::min);
    let h_max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c = c.clamp(h_min, h_max);
    let mut best = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            best = best.max(g[x * n + y].min(c) - e[x].min(c) - e[y].min(c) + h_min);
        }
    }
    best
}

/// Landscapes with positive clipped critical heights used by the slope checks:
/// `(name, landscape, threshold, c*)`.
pub fn slope_landscapes() -> Vec<(&'static str, FiniteLandscape, f64, f64)> {
    // Path 0-2-1: G(0,2) = 2, so c* = min(2, c) − 1 for c in [1, 2].
    let a = FiniteLandscape::path(vec![0.0, 2.0, 1.0]).unwrap();
    // Path with H⁰ = 3 − 0.5 − 0 = 2.5, attained at c = max elevation 3.
    let b = FiniteLandscape::path(vec![0.0, 3.0, 1.0, 2.5, 0.5]).unwrap();
    let c = FiniteLandscape::grid(3, 3, vec![0.0, 1.0, 0.6, 2.0, 3.0, 1.4, 0.8, 2.2, 0.3]).unwrap();
    let c_star_c = oracle_c_star(&c, 1.2);
    vec![("path3", a, 1.8, 0.8), ("path5", b, 3.0, 2.5), ("grid3x3", c, 1.2, c_star_c)]
}

pub fn double_well_20() -> FiniteLandscape {
    FiniteLandscape::path(landmod::cli::config::DOUBLE_WELL_20.to_vec()).unwrap()
}

/// Hypercube `{−1, 1}^N` with energies `N·E(m)`, uniform `μ` and single flips at rate `1/N`.
pub fn glauber_landscape(cw: &CurieWeiss, n: usize) -> FiniteLandscape {
    let states = 1usize << n;
    let energies: Vec<f64> = (0..states)
        .map(|s| {
            let m = (2.0 * s.count_ones() as f64 - n as f64) / n as f64;
            n as f64 * cw.energy(m).unwrap()
        })
        .collect();
    let mu = vec![1.0 / states as f64; states];
    let mut pairs = Vec::new();
    for s in 0..states {
        for i in 0..n {
            let t = s ^ (1 << i);
            if s < t {
                pairs.push((s, t, 1.0 / n as f64));
            }
        }
    }
    FiniteLandscape::from_pairs(energies, mu, &pairs).unwrap()
}

/// Spin-chain generator whose modified energy is `N·E^f(m)`: for energies
/// `N·E`, shape `f(·/N)` with threshold `N·c` does exactly that.
pub fn glauber_generator(cw: &CurieWeiss, variant: &Variant, n: usize) -> Generator {
    let land = glauber_landscape(cw, n);
    let nf = n as f64;
    let spec = match variant {
        Variant::Classical => TransformSpec::classical(cw.epsilon()).unwrap(),
        Variant::Modified { family, c } => {
            let f = family.clone();
            let shape: landmod::transform::ShapeFn = Arc::new(move |x: f64| f.eval(x / nf));
            TransformSpec::new(Family::Custom(shape), nf * c, cw.epsilon()).unwrap()
        }
    };
    build_mh_generator(&land, &spec).unwrap()
}

/// Connected graph from a random tree (`parents`) plus `extra` edges; `weights`
/// are normalized into `μ`.
pub fn random_landscape(
    energies: Vec<f64>,
    weights: &[f64],
    parents: &[usize],
    extra: &[(usize, usize)],
    rates: &[f64],
) -> FiniteLandscape {
    let n = energies.len();
    let total: f64 = weights[..n].iter().sum();
    let mu: Vec<f64> = weights[..n].iter().map(|w| w / total).collect();
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    let mut k = 0;
    let mut push = |x: usize, y: usize, pairs: &mut Vec<(usize, usize, f64)>| {
        let (a, b) = (x.min(y), x.max(y));
        if a != b && !pairs.iter().any(|p| p.0 == a && p.1 == b) {
            pairs.push((a, b, rates[k % rates.len()]));
            k += 1;
        }
    };
    for x in 1..n {
        push(parents[x - 1] % x, x, &mut pairs);
    }
    for &(x, y) in extra {
        push(x % n, y % n, &mut pairs);
    }
    FiniteLandscape::from_pairs(energies, mu, &pairs).unwrap()
}

prop_compose! {
    /// Random connected landscape with `lo..=hi` states.
    pub fn arb_landscape(lo: usize, hi: usize)(n in lo..=hi)(
        energies in proptest::collection::vec(-2.0f64..2.0, n),
        weights in proptest::collection::vec(0.2f64..1.0, n),
        parents in proptest::collection::vec(0usize..1000, n - 1),
        extra in proptest::collection::vec((0usize..1000, 0usize..1000), 0..n),
        rates in proptest::collection::vec(0.2f64..2.0, 2 * n),
    ) -> FiniteLandscape {
        random_landscape(energies, &weights, &parents, &extra, &rates)
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric row-major matrix:
/// eigenvalues and row-major eigenvectors (column `j` pairs with value `j`).
pub fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let scale: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

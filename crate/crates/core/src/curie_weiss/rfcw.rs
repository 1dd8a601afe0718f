//! Random-field Curie–Weiss: two sub-magnetizations `m⁺`, `m⁻` over the spins
//! with field `+θ` and `−θ`.

use rand::Rng;

use crate::analysis::bottleneck_from;
use crate::chain::replica_rng;
use crate::curie_weiss::{cramer_rate, Variant};
use crate::error::{Error, Result};
use crate::transform::TransformSpec;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomFieldCw {
    pub theta: f64,
    pub beta: f64,
    /// Fraction `N⁺/N` of sites with field `+θ`.
    pub plus_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Minimum,
    Saddle,
    Maximum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub m: Point,
    pub kind: PointKind,
    pub residual: f64,
    pub converged: bool,
}

/// Free-energy values on the cell centres of a `k × k` grid.
#[derive(Debug, Clone)]
pub struct Surface {
    pub k: usize,
    pub plus_axis: Vec<f64>,
    pub minus_axis: Vec<f64>,
    /// Row-major: `values[i * k + j]` at `(plus_axis[i], minus_axis[j])`.
    pub values: Vec<f64>,
}

impl Surface {
    pub fn nearest(&self, m: Point) -> usize {
        let idx = |axis: &[f64], v: f64| {
            (0..axis.len())
                .min_by(|&a, &b| (axis[a] - v).abs().total_cmp(&(axis[b] - v).abs()))
                .unwrap_or(0)
        };
        idx(&self.plus_axis, m[0]) * self.k + idx(&self.minus_axis, m[1])
    }

    /// Minimax elevation between two cells over 4-neighbour paths.
    pub fn elevation(&self, from: usize, to: usize) -> f64 {
        let k = self.k;
        let (dist, _) = bottleneck_from(&self.values, from, |x, push| {
            let (i, j) = (x / k, x % k);
            if i > 0 {
                push(x - k);
            }
            if i + 1 < k {
                push(x + k);
            }
            if j > 0 {
                push(x - 1);
            }
            if j + 1 < k {
                push(x + 1);
            }
        });
        dist[to]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barrier {
    /// `min_γ max g − g(m₁)` over grid paths from `m₁` to `m₀`.
    pub to_saddle: f64,
    /// The same over paths from `m₁` to `m₂`.
    pub between_minima: f64,
}

impl RandomFieldCw {
    pub fn new(theta: f64, beta: f64) -> Result<Self> {
        Self::with_fraction(theta, beta, 0.5)
    }

    pub fn with_fraction(theta: f64, beta: f64, plus_fraction: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Config(format!("theta must be positive, got {theta}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        if !(plus_fraction > 0.0 && plus_fraction < 1.0) {
            return Err(Error::Config(format!("field split {plus_fraction} must lie in (0, 1)")));
        }
        Ok(Self {
            theta,
            beta,
            plus_fraction,
        })
    }

    /// Split drawn from `n` fair ±1 fields.
    pub fn with_random_split(theta: f64, beta: f64, n: usize, seed: u64) -> Result<Self> {
        let mut rng = replica_rng(seed, 0);
        let plus = (0..n).filter(|_| rng.gen::<bool>()).count();
        if plus == 0 || plus == n {
            return Err(Error::Config(format!("degenerate field split {plus}/{n}")));
        }
        Self::with_fraction(theta, beta, plus as f64 / n as f64)
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.beta
    }

    fn fractions(&self) -> [f64; 2] {
        [self.plus_fraction, 1.0 - self.plus_fraction]
    }

    /// Whether `β > cosh²(βθ)`.
    pub fn is_subcritical(&self) -> bool {
        self.beta > (self.beta * self.theta).cosh().powi(2)
    }

    fn check(&self, m: Point) -> Result<()> {
        let p = self.fractions();
        if m[0].abs() > p[0] || m[1].abs() > p[1] {
            return Err(Error::Domain(format!("({}, {}) outside the magnetization box", m[0], m[1])));
        }
        Ok(())
    }

    /// `𝐄(m) = −½(m⁺ + m⁻)² − θ(m⁺ − m⁻)`.
    pub fn energy(&self, m: Point) -> f64 {
        let s = m[0] + m[1];
        -0.5 * s * s - self.theta * (m[0] - m[1])
    }

    /// Minimum of `𝐄` over the corners of the box.
    pub fn reference_level(&self) -> f64 {
        let p = self.fractions();
        [[p[0], p[1]], [p[0], -p[1]], [-p[0], p[1]], [-p[0], -p[1]]]
            .iter()
            .map(|&c| self.energy(c))
            .fold(f64::INFINITY, f64::min)
    }

    /// `p⁺ I(m⁺/p⁺) + p⁻ I(m⁻/p⁻)`; equals `½(I(2m⁺) + I(2m⁻))` for the even split.
    pub fn entropy(&self, m: Point) -> Result<f64> {
        self.check(m)?;
        let p = self.fractions();
        Ok(p[0] * cramer_rate(m[0] / p[0])? + p[1] * cramer_rate(m[1] / p[1])?)
    }

    pub fn spec(&self, variant: &Variant) -> Result<Option<TransformSpec>> {
        match variant {
            Variant::Classical => Ok(None),
            Variant::Modified { family, c } => TransformSpec::new(family.clone(), *c, self.epsilon()).map(Some),
        }
    }

    fn free_energy_with(&self, spec: Option<&TransformSpec>, m: Point) -> Result<f64> {
        let s = self.entropy(m)?;
        Ok(match spec {
            None => self.energy(m) + s / self.beta,
            Some(sp) => sp.gap(self.reference_level(), self.energy(m))? + s,
        })
    }

    /// `𝐠_ε = 𝐄 + (1/β)·entropy` or `𝐠^f = 𝐄^f + entropy`.
    pub fn free_energy(&self, variant: &Variant, m: Point) -> Result<f64> {
        let spec = self.spec(variant)?;
        self.free_energy_with(spec.as_ref(), m)
    }

    fn inverse_temperature_at(&self, spec: Option<&TransformSpec>, m: Point) -> f64 {
        match spec {
            None => self.beta,
            Some(s) => 1.0 / (s.family().eval((self.energy(m) - s.threshold()).max(0.0)) + s.epsilon()),
        }
    }

    /// Right-hand side of the mean-field equations.
    pub fn mean_field_map(&self, spec: Option<&TransformSpec>, m: Point) -> Point {
        let p = self.fractions();
        let a = self.inverse_temperature_at(spec, m);
        let s = m[0] + m[1];
        [p[0] * (a * (s + self.theta)).tanh(), p[1] * (a * (s - self.theta)).tanh()]
    }

    /// Analytic gradient of the free energy.
    pub fn gradient(&self, variant: &Variant, m: Point) -> Result<Point> {
        self.check(m)?;
        let spec = self.spec(variant)?;
        let p = self.fractions();
        let s = m[0] + m[1];
        let de = [-s - self.theta, -s + self.theta];
        let ent = [(m[0] / p[0]).atanh(), (m[1] / p[1]).atanh()];
        Ok(match spec {
            None => [de[0] + ent[0] / self.beta, de[1] + ent[1] / self.beta],
            Some(ref sp) => {
                let a = self.inverse_temperature_at(Some(sp), m);
                [a * de[0] + ent[0], a * de[1] + ent[1]]
            }
        })
    }

    /// Positive root `m_*` of `m = ½(tanh(β(m + θ)) + tanh(β(m − θ)))`.
    pub fn m_star(&self) -> Result<f64> {
        let f = |m: f64| 0.5 * ((self.beta * (m + self.theta)).tanh() + (self.beta * (m - self.theta)).tanh()) - m;
        let (mut lo, mut hi) = (1e-9, 1.0);
        if !(f(lo) > 0.0) {
            return Err(Error::Precondition("no positive mean-field root; not subcritical".into()));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `(m₀, m₁, m₂)`: saddle and the two minima from the closed forms (even split).
    pub fn closed_form_points(&self) -> Result<(Point, Point, Point)> {
        if self.plus_fraction != 0.5 {
            return Err(Error::Precondition("closed forms need the even field split".into()));
        }
        let (b, t) = (self.beta, self.theta);
        let ms = self.m_star()?;
        let m0 = [0.5 * (b * t).tanh(), -0.5 * (b * t).tanh()];
        let m1 = [0.5 * (b * ms + b * t).tanh(), 0.5 * (b * ms - b * t).tanh()];
        let m2 = [0.5 * (-b * ms + b * t).tanh(), -0.5 * (b * ms + b * t).tanh()];
        Ok((m0, m1, m2))
    }

    fn residual(&self, spec: Option<&TransformSpec>, m: Point) -> Point {
        let t = self.mean_field_map(spec, m);
        [m[0] - t[0], m[1] - t[1]]
    }

    fn newton(&self, spec: Option<&TransformSpec>, start: Point) -> (Point, f64, bool) {
        let p = self.fractions();
        let norm = |r: Point| r[0].hypot(r[1]);
        let inside = |m: Point| m[0].abs() < p[0] && m[1].abs() < p[1];
        let mut m = start;
        let mut r = self.residual(spec, m);
        for _ in 0..200 {
            if norm(r) < 1e-14 {
                return (m, norm(r), true);
            }
            let h = 1e-7;
            let mut jac = [[0.0; 2]; 2];
            for k in 0..2 {
                let mut a = m;
                let mut b = m;
                a[k] += h;
                b[k] -= h;
                let (ra, rb) = (self.residual(spec, a), self.residual(spec, b));
                jac[0][k] = (ra[0] - rb[0]) / (2.0 * h);
                jac[1][k] = (ra[1] - rb[1]) / (2.0 * h);
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let step = [
                -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
                -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
            ];
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-10 {
                let cand = [m[0] + t * step[0], m[1] + t * step[1]];
                if inside(cand) {
                    let rc = self.residual(spec, cand);
                    if norm(rc) < norm(r) {
                        m = cand;
                        r = rc;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        (m, norm(r), norm(r) < 1e-10)
    }

    fn classify(&self, variant: &Variant, m: Point) -> Result<PointKind> {
        let h = 1e-5;
        let g = |a: f64, b: f64| self.free_energy(variant, [m[0] + a, m[1] + b]);
        let g0 = g(0.0, 0.0)?;
        let gxx = (g(h, 0.0)? - 2.0 * g0 + g(-h, 0.0)?) / (h * h);
        let gyy = (g(0.0, h)? - 2.0 * g0 + g(0.0, -h)?) / (h * h);
        let gxy = (g(h, h)? - g(h, -h)? - g(-h, h)? + g(-h, -h)?) / (4.0 * h * h);
        let det = gxx * gyy - gxy * gxy;
        Ok(if det < 0.0 {
            PointKind::Saddle
        } else if gxx > 0.0 {
            PointKind::Minimum
        } else {
            PointKind::Maximum
        })
    }

    /// Critical points by grid scan of the mean-field residual and damped Newton polish.
    pub fn critical_points(&self, variant: &Variant) -> Result<Vec<CriticalPoint>> {
        let spec = self.spec(variant)?;
        let spec = spec.as_ref();
        let p = self.fractions();
        let k = 160;
        let axis = |q: f64| -> Vec<f64> { (0..k).map(|i| -q + (i as f64 + 0.5) * 2.0 * q / k as f64).collect() };
        let (ax, ay) = (axis(p[0]), axis(p[1]));
        let res: Vec<f64> = (0..k * k)
            .map(|x| {
                let r = self.residual(spec, [ax[x / k], ay[x % k]]);
                r[0].hypot(r[1])
            })
            .collect();
        let mut found: Vec<CriticalPoint> = Vec::new();
        for i in 0..k {
            for j in 0..k {
                let v = res[i * k + j];
                if v > 0.05 {
                    continue;
                }
                let mut is_min = true;
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if (di, dj) != (0, 0) && a >= 0 && b >= 0 && a < k as i64 && b < k as i64 && res[a as usize * k + b as usize] < v {
                            is_min = false;
                        }
                    }
                }
                if !is_min {
                    continue;
                }
                let (m, residual, converged) = self.newton(spec, [ax[i], ay[j]]);
                if !converged {
                    continue;
                }
                if found.iter().any(|c| (c.m[0] - m[0]).hypot(c.m[1] - m[1]) < 1e-7) {
                    continue;
                }
                found.push(CriticalPoint {
                    m,
                    kind: self.classify(variant, m)?,
                    residual,
                    converged,
                });
            }
        }
        found.sort_by(|a, b| a.m[0].total_cmp(&b.m[0]).then(a.m[1].total_cmp(&b.m[1])));
        Ok(found)
    }

    pub fn surface(&self, variant: &Variant, k: usize) -> Result<Surface> {
        if k < 3 {
            return Err(Error::Argument(format!("grid resolution {k} too small")));
        }
        let spec = self.spec(variant)?;
        let p = self.fractions();
        let axis = |q: f64| -> Vec<f64> { (0..k).map(|i| -q + (i as f64 + 0.5) * 2.0 * q / k as f64).collect() };
        let (plus_axis, minus_axis) = (axis(p[0]), axis(p[1]));
        let mut values = Vec::with_capacity(k * k);
        for &a in &plus_axis {
            for &b in &minus_axis {
                values.push(self.free_energy_with(spec.as_ref(), [a, b])?);
            }
        }
        Ok(Surface {
            k,
            plus_axis,
            minus_axis,
            values,
        })
    }

    /// Critical heights on the `k × k` grid, using the classical critical points.
    pub fn barrier(&self, variant: &Variant, k: usize) -> Result<Barrier> {
        let (m0, m1, m2) = self.closed_form_points()?;
        let surf = self.surface(variant, k)?;
        let (c0, c1, c2) = (surf.nearest(m0), surf.nearest(m1), surf.nearest(m2));
        if c0 == c1 || c1 == c2 || c0 == c2 {
            return Err(Error::Range(format!("grid of {k} cells cannot separate the critical points")));
        }
        let base = surf.values[c1];
        Ok(Barrier {
            to_saddle: surf.elevation(c1, c0) - base,
            between_minima: surf.elevation(c1, c2) - base,
        })
    }
}

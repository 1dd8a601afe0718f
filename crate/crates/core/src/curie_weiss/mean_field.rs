use std::f64::consts::LN_2;

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::transform::{Family, TransformSpec};

/// Classical chain or landscape modification with shape `family` above `c`.
/// The temperature always comes from the model's `β`.
#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    Classical,
    Modified { family: Family, c: f64 },
}

impl Variant {
    pub fn linear(c: f64) -> Self {
        Variant::Modified {
            family: Family::Linear,
            c,
        }
    }
}

/// `E(m) = −m²/2 − h m`.
pub fn energy(m: f64, h: f64) -> Result<f64> {
    if !(m.abs() <= 1.0) {
        return Err(Error::Domain(format!("magnetization {m} outside [-1, 1]")));
    }
    Ok(-0.5 * m * m - h * m)
}

/// Cramér rate function of fair coin tossing; `ln 2` at `±1`.
pub fn cramer_rate(m: f64) -> Result<f64> {
    if !(m.abs() <= 1.0) {
        return Err(Error::Domain(format!("magnetization {m} outside [-1, 1]")));
    }
    if m.abs() == 1.0 {
        return Ok(LN_2);
    }
    Ok(0.5 * ((1.0 + m) * m.ln_1p() + (1.0 - m) * (-m).ln_1p()))
}

/// Index `k` of `m = −1 + 2k/N` in `Γ_N`.
pub fn grid_index(m: f64, n: usize) -> Result<usize> {
    let k = (m + 1.0) * n as f64 / 2.0;
    let r = k.round();
    if !(r >= 0.0 && r <= n as f64) || (k - r).abs() > 1e-9 {
        return Err(Error::Domain(format!("{m} is not a point of Γ_{n}")));
    }
    Ok(r as usize)
}

pub fn grid_point(k: usize, n: usize) -> f64 {
    -1.0 + 2.0 * k as f64 / n as f64
}

/// `I_N(m) = −(1/N) ln(C(N, (1+m)N/2) 2^{−N})` for `m ∈ Γ_N`.
pub fn cramer_rate_finite(m: f64, n: usize) -> Result<f64> {
    let k = grid_index(m, n)?;
    Ok(-(ln_binomial(n as u64, k as u64) - n as f64 * LN_2) / n as f64)
}

/// Which free-energy curve a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Classical,
    Modified,
    ClassicalFinite(usize),
    ModifiedFinite(usize),
}

#[derive(Debug, Clone)]
pub struct FreeEnergyCurve {
    pub kind: CurveKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl FreeEnergyCurve {
    pub fn argmin(&self) -> f64 {
        let i = (0..self.values.len())
            .min_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .unwrap_or(0);
        self.grid[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stationarity {
    Minimum,
    Maximum,
    /// Tangential root at criticality.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub m: f64,
    pub kind: Stationarity,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct MeanFieldRoots {
    pub roots: Vec<Root>,
    pub tolerance: f64,
}

impl MeanFieldRoots {
    pub fn minima(&self) -> Vec<f64> {
        self.roots.iter().filter(|r| r.kind == Stationarity::Minimum).map(|r| r.m).collect()
    }

    pub fn maxima(&self) -> Vec<f64> {
        self.roots.iter().filter(|r| r.kind == Stationarity::Maximum).map(|r| r.m).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.m).collect()
    }
}

pub const ROOT_SCAN_POINTS: usize = 10_000;

/// Curie–Weiss model at inverse temperature `β` in external field `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurieWeiss {
    pub beta: f64,
    pub h: f64,
}

impl CurieWeiss {
    pub fn new(beta: f64, h: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        if !h.is_finite() {
            return Err(Error::Config(format!("field h must be finite, got {h}")));
        }
        Ok(Self { beta, h })
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.beta
    }

    pub fn energy(&self, m: f64) -> Result<f64> {
        energy(m, self.h)
    }

    /// `d = min E = −½ − |h|`, the anchor of the modified energy.
    pub fn reference_level(&self) -> f64 {
        -0.5 - self.h.abs()
    }

    pub fn spec(&self, variant: &Variant) -> Result<Option<TransformSpec>> {
        match variant {
            Variant::Classical => Ok(None),
            Variant::Modified { family, c } => TransformSpec::new(family.clone(), *c, self.epsilon()).map(Some),
        }
    }

    /// `E^f(m) = ∫_d^{E(m)} du / (f((u − c)₊) + ε)`.
    pub fn modified_energy(&self, spec: &TransformSpec, m: f64) -> Result<f64> {
        spec.gap(self.reference_level(), self.energy(m)?)
    }

    /// `g_ε = E + εI` (classical) or `g^f = E^f + I` (modified).
    pub fn free_energy(&self, variant: &Variant, m: f64) -> Result<f64> {
        let spec = self.spec(variant)?;
        self.free_energy_with(spec.as_ref(), m, cramer_rate(m)?)
    }

    /// Finite-`N` version with `I_N` in place of `I`; `m` must lie on `Γ_N`.
    pub fn free_energy_finite(&self, variant: &Variant, m: f64, n: usize) -> Result<f64> {
        let spec = self.spec(variant)?;
        self.free_energy_with(spec.as_ref(), m, cramer_rate_finite(m, n)?)
    }

    fn free_energy_with(&self, spec: Option<&TransformSpec>, m: f64, entropy: f64) -> Result<f64> {
        match spec {
            None => Ok(self.energy(m)? + self.epsilon() * entropy),
            Some(s) => Ok(self.modified_energy(s, m)? + entropy),
        }
    }

    /// Exponent density of the stationary law: `β g_ε` or `g^f`.
    pub fn scaled_free_energy(&self, variant: &Variant, m: f64) -> Result<f64> {
        let g = self.free_energy(variant, m)?;
        Ok(match variant {
            Variant::Classical => self.beta * g,
            Variant::Modified { .. } => g,
        })
    }

    pub fn curve(&self, variant: &Variant, grid: &[f64]) -> Result<FreeEnergyCurve> {
        let values = grid.iter().map(|&m| self.free_energy(variant, m)).collect::<Result<_>>()?;
        let kind = match variant {
            Variant::Classical => CurveKind::Classical,
            Variant::Modified { .. } => CurveKind::Modified,
        };
        Ok(FreeEnergyCurve {
            kind,
            grid: grid.to_vec(),
            values,
        })
    }

    /// Curve over `Γ_N` using `I_N`.
    pub fn curve_finite(&self, variant: &Variant, n: usize) -> Result<FreeEnergyCurve> {
        let grid: Vec<f64> = (0..=n).map(|k| grid_point(k, n)).collect();
        let values = grid
            .iter()
            .map(|&m| self.free_energy_finite(variant, m, n))
            .collect::<Result<_>>()?;
        let kind = match variant {
            Variant::Classical => CurveKind::ClassicalFinite(n),
            Variant::Modified { .. } => CurveKind::ModifiedFinite(n),
        };
        Ok(FreeEnergyCurve { kind, grid, values })
    }

    /// Argument of `tanh` in the mean-field equation: `β(m + h)` or
    /// `(m + h) / (f((E(m) − c)₊) + ε)`.
    pub fn field_argument(&self, spec: Option<&TransformSpec>, m: f64) -> Result<f64> {
        let x = m + self.h;
        Ok(match spec {
            None => self.beta * x,
            Some(s) => {
                let e = self.energy(m)?;
                let f = s.family().eval((e - s.threshold()).max(0.0));
                // Where f vanishes the equation is the classical one; keep it bit-identical.
                if f == 0.0 {
                    self.beta * x
                } else {
                    x / (f + s.epsilon())
                }
            }
        })
    }

    pub fn mean_field_rhs(&self, variant: &Variant, m: f64) -> Result<f64> {
        let spec = self.spec(variant)?;
        Ok(self.field_argument(spec.as_ref(), m)?.tanh())
    }

    /// All roots of `m = tanh(·)` on `(−1, 1)`: sign-change scan on
    /// [`ROOT_SCAN_POINTS`] points, refined by bisection.
    pub fn solve_mean_field(&self, variant: &Variant, tolerance: f64) -> Result<MeanFieldRoots> {
        if !(tolerance > 0.0) {
            return Err(Error::Argument(format!("tolerance must be positive, got {tolerance}")));
        }
        let spec = self.spec(variant)?;
        let spec = spec.as_ref();
        let r = |m: f64| -> Result<f64> { Ok(m - self.field_argument(spec, m)?.tanh()) };
        let k = ROOT_SCAN_POINTS;
        let grid: Vec<f64> = (0..k).map(|i| -1.0 + (i as f64 + 0.5) * 2.0 / k as f64).collect();
        let vals = grid.iter().map(|&m| r(m)).collect::<Result<Vec<_>>>()?;
        let mut roots = Vec::new();
        for i in 0..k - 1 {
            let (a, b) = (vals[i], vals[i + 1]);
            if a == 0.0 {
                roots.push((grid[i], a, b));
            } else if a * b < 0.0 {
                let (mut lo, mut hi) = (grid[i], grid[i + 1]);
                let mut flo = a;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = r(mid)?;
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (fm < 0.0) == (flo < 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                let m = if r(lo)?.abs() <= r(hi)?.abs() { lo } else { hi };
                roots.push((m, a, b));
            } else if i > 0 && a.abs() <= tolerance && a.abs() <= vals[i - 1].abs() && a.abs() <= b.abs() && vals[i - 1] * b > 0.0 {
                // Touches zero without crossing.
                roots.push((grid[i], a, b));
            }
        }
        let out = roots
            .into_iter()
            .map(|(m, a, b)| {
                let residual = r(m)?;
                let kind = if a < 0.0 && b > 0.0 {
                    Stationarity::Minimum
                } else if a > 0.0 && b < 0.0 {
                    Stationarity::Maximum
                } else {
                    Stationarity::Degenerate
                };
                Ok(Root { m, kind, residual })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(bad) = out.iter().find(|r| r.residual.abs() > tolerance) {
            return Err(Error::numerical(
                "solve_mean_field",
                format!("root near {} has residual {}", bad.m, bad.residual),
            ));
        }
        Ok(MeanFieldRoots { roots: out, tolerance })
    }
}

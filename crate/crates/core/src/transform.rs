//! Landscape-modified energy differences.
//!
//! The modified energy of a state is `∫_{H_min}^{H(x)} du / (f((u − c)₊) + ε)`. Only
//! differences are ever needed, so everything here works on pairs `(hx, hy)`.
//! Below the threshold `c` the integrand is the constant `β = 1/ε`; above it the
//! shape function `f` flattens the landscape.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature;

/// Smallest admissible temperature; keeps `β` finite.
pub const MIN_EPSILON: f64 = 1e-300;

/// Absolute tolerance used when a custom shape falls back to quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-12;

pub type ShapeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The shape function `f` applied to the excess energy `(u − c)₊`.
#[derive(Clone)]
pub enum Family {
    /// `f = 0`: classical Metropolis–Hastings.
    Zero,
    /// `f(x) = x`: logarithmic landscape above `c`.
    Linear,
    /// `f(x) = x²`: arctangent landscape above `c`.
    Quadratic,
    /// `f(x) = √x`.
    SquareRoot,
    /// Any non-negative, non-decreasing `f` with `f(0) = 0`; integrated numerically.
    Custom(ShapeFn),
}

impl Family {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Family::Zero => 0.0,
            Family::Linear => x,
            Family::Quadratic => x * x,
            Family::SquareRoot => x.sqrt(),
            Family::Custom(f) => f(x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Zero => "zero",
            Family::Linear => "linear",
            Family::Quadratic => "quadratic",
            Family::SquareRoot => "sqrt",
            Family::Custom(_) => "custom",
        }
    }

    /// Whether `f(x) ≥ x` holds for small `x > 0`, the extra hypothesis behind the
    /// low-temperature spectral-gap asymptotics.
    pub fn dominates_identity_near_zero(&self) -> bool {
        match self {
            Family::Zero | Family::Quadratic => false,
            Family::Linear | Family::SquareRoot => true,
            Family::Custom(f) => (1..=50).all(|k| {
                let x = 1e-3 * k as f64 / 50.0;
                f(x) >= x
            }),
        }
    }

    /// Whether `f'(0) = 0` (smooth start). Linear and square-root shapes violate it.
    pub fn flat_at_origin(&self) -> bool {
        match self {
            Family::Zero | Family::Quadratic => true,
            Family::Linear | Family::SquareRoot => false,
            Family::Custom(f) => {
                let h = 1e-6;
                (f(h) - f(0.0)) / h < 1e-3
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let Family::Custom(f) = self else {
            return Ok(());
        };
        let f0 = f(0.0);
        if f0.abs() > 1e-12 {
            return Err(Error::Config(format!("custom shape must satisfy f(0) = 0, got {f0}")));
        }
        let mut grid: Vec<f64> = (0..=200).map(|k| 0.05 * k as f64).collect();
        grid.extend((0..=180).map(|k| 10f64.powf(-6.0 + k as f64 / 20.0)));
        grid.sort_by(f64::total_cmp);
        let mut prev = f0;
        for &x in &grid {
            let v = f(x);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("custom shape is negative or non-finite at {x}: {v}")));
            }
            if v < prev - 1e-12 {
                return Err(Error::Config(format!("custom shape decreases near {x}")));
            }
            prev = v;
        }
        Ok(())
    }
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for Family {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Family::Custom(a), Family::Custom(b)) => Arc::ptr_eq(a, b),
            (a, b) => std::mem::discriminant(a) == std::mem::discriminant(b),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "classical" | "none" => Ok(Family::Zero),
            "linear" => Ok(Family::Linear),
            "quadratic" => Ok(Family::Quadratic),
            "sqrt" | "squareroot" | "square-root" => Ok(Family::SquareRoot),
            other => Err(Error::Config(format!(
                "unknown transform family `{other}` (expected zero, linear, quadratic or sqrt)"
            ))),
        }
    }
}

/// Shape `f`, threshold `c` and temperature `ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformSpec {
    family: Family,
    c: f64,
    epsilon: f64,
}

impl TransformSpec {
    pub fn new(family: Family, c: f64, epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < MIN_EPSILON {
            return Err(Error::Config(format!(
                "temperature must be finite and at least {MIN_EPSILON:e}, got {epsilon}"
            )));
        }
        if !c.is_finite() {
            return Err(Error::Config(format!("threshold c must be finite, got {c}")));
        }
        family.validate()?;
        Ok(Self { family, c, epsilon })
    }

    /// Classical Metropolis at temperature `epsilon`.
    pub fn classical(epsilon: f64) -> Result<Self> {
        Self::new(Family::Zero, 0.0, epsilon)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn threshold(&self) -> f64 {
        self.c
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.epsilon
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.family.clone(), self.c, epsilon)
    }

    pub fn with_threshold(&self, c: f64) -> Result<Self> {
        Self::new(self.family.clone(), c, self.epsilon)
    }

    /// The integrand `1 / (f((u − c)₊) + ε)`.
    pub fn integrand(&self, u: f64) -> f64 {
        1.0 / (self.family.eval((u - self.c).max(0.0)) + self.epsilon)
    }

    /// `∫_{hx}^{hy}` of the integrand, via the closed forms.
    pub fn gap(&self, hx: f64, hy: f64) -> Result<f64> {
        if !hx.is_finite() || !hy.is_finite() {
            return Err(Error::Argument(format!("energies must be finite, got {hx}, {hy}")));
        }
        if hx == hy {
            return Ok(0.0);
        }
        if hy < hx {
            return self.gap(hy, hx).map(|g| -g);
        }
        let beta = self.beta();
        if matches!(self.family, Family::Zero) {
            return Ok(beta * (hy - hx));
        }
        let c = self.c;
        if hy <= c {
            Ok(beta * (hy - hx))
        } else if hx <= c {
            Ok(beta * (c - hx) + self.gap_above(0.0, hy - c)?)
        } else {
            self.gap_above(hx - c, hy - c)
        }
    }

    /// Integral over `[c + lo, c + hi]` with `0 ≤ lo ≤ hi`.
    fn gap_above(&self, lo: f64, hi: f64) -> Result<f64> {
        let eps = self.epsilon;
        let v = match &self.family {
            Family::Zero => (hi - lo) / eps,
            Family::Linear => ((hi - lo) / (lo + eps)).ln_1p(),
            Family::Quadratic => {
                let sb = self.beta().sqrt();
                sb * (sb * (hi - lo) / (1.0 + self.beta() * lo * hi)).atan()
            }
            Family::SquareRoot => {
                let (sl, sh) = (lo.sqrt(), hi.sqrt());
                if sl + sh == 0.0 {
                    return Ok(0.0);
                }
                let ds = (hi - lo) / (sl + sh);
                let r = ds / (sl + eps);
                2.0 * (sl * r + eps * x_minus_log1p(r))
            }
            Family::Custom(_) => {
                let c = self.c;
                let tol = DEFAULT_QUAD_TOL * (1.0 + (hi - lo) / eps);
                quadrature::integrate(|u| self.integrand(u), c + lo, c + hi, tol)?
            }
        };
        Ok(v)
    }

    /// Metropolis acceptance `exp(−(gap)₊)`.
    pub fn acceptance(&self, hx: f64, hy: f64) -> Result<f64> {
        Ok((-self.gap(hx, hy)?.max(0.0)).exp())
    }
}

/// `r − ln(1 + r)` without cancellation for small `r`.
fn x_minus_log1p(r: f64) -> f64 {
    if r.abs() < 0.1 {
        let mut term = r * r;
        let mut sum = 0.0;
        for k in 2..40 {
            let t = term / k as f64;
            sum += if k % 2 == 0 { t } else { -t };
            if t.abs() < 1e-18 * sum.abs() {
                break;
            }
            term *= r;
        }
        sum
    } else {
        r - r.ln_1p()
    }
}

/// A modified energy difference `H^f(y) − H^f(x)`; dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EnergyGap(f64);

impl EnergyGap {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn modified_gap(spec: &TransformSpec, hx: f64, hy: f64) -> Result<EnergyGap> {
    spec.gap(hx, hy).map(EnergyGap)
}

pub fn acceptance_probability(spec: &TransformSpec, hx: f64, hy: f64) -> Result<f64> {
    spec.acceptance(hx, hy)
}

/// Same integral as [`modified_gap`] by adaptive quadrature, split at `c`.
///
/// Independent of the closed forms; used to check them.
pub fn quadrature_gap(spec: &TransformSpec, hx: f64, hy: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be > 0, got {tol}")));
    }
    if !hx.is_finite() || !hy.is_finite() {
        return Err(Error::Argument(format!("energies must be finite, got {hx}, {hy}")));
    }
    let (lo, hi, sign) = if hx <= hy { (hx, hy, 1.0) } else { (hy, hx, -1.0) };
    let c = spec.threshold();
    let f = |u: f64| spec.integrand(u);
    let v = if lo < c && c < hi {
        quadrature::integrate(f, lo, c, tol / 2.0)? + quadrature::integrate(f, c, hi, tol / 2.0)?
    } else {
        quadrature::integrate(f, lo, hi, tol)?
    };
    Ok(sign * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, LN_2};

    fn spec(family: Family, c: f64, eps: f64) -> TransformSpec {
        TransformSpec::new(family, c, eps).unwrap()
    }

    #[test]
    fn zero_family_is_beta_scaling() {
        let s = spec(Family::Zero, 0.0, 0.5);
        assert_eq!(modified_gap(&s, 1.0, 3.0).unwrap().value(), 4.0);
    }

    #[test]
    fn linear_straddle_is_log_ratio() {
        let s = spec(Family::Linear, 1.0, 0.5);
        let g = modified_gap(&s, 1.0, 2.0).unwrap().value();
        assert!((g - 3f64.ln()).abs() < 1e-15);
        let q = quadrature_gap(&s, 1.0, 2.0, 1e-10).unwrap();
        assert!((q - 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn empty_interval_has_zero_gap() {
        for fam in [Family::Zero, Family::Linear, Family::Quadratic, Family::SquareRoot] {
            let s = spec(fam, 0.3, 0.7);
            assert_eq!(modified_gap(&s, 1.25, 1.25).unwrap().value(), 0.0);
        }
    }

    #[test]
    fn quadratic_unit_temperature_is_quarter_pi() {
        let s = spec(Family::Quadratic, 0.0, 1.0);
        let g = modified_gap(&s, 0.0, 1.0).unwrap().value();
        assert!((g - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn downhill_moves_always_accepted() {
        for fam in [Family::Zero, Family::Linear, Family::Quadratic, Family::SquareRoot] {
            let s = spec(fam, -0.2, 0.3);
            assert_eq!(acceptance_probability(&s, 2.0, -1.0).unwrap(), 1.0);
            assert_eq!(acceptance_probability(&s, 2.0, 2.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn linear_acceptance_above_threshold() {
        let s = spec(Family::Linear, 1.0, 0.5);
        let a = acceptance_probability(&s, 1.5, 2.5).unwrap();
        assert!((a - 0.5).abs() < 1e-15);
    }

    #[test]
    fn classical_acceptance() {
        let s = TransformSpec::classical(1.0).unwrap();
        let a = acceptance_probability(&s, 0.0, 1.0).unwrap();
        assert!((a - (-1f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn quadrature_of_flat_integrand() {
        let s = spec(Family::Zero, 0.0, 0.25);
        let q = quadrature_gap(&s, 0.0, 1.0, 1e-12).unwrap();
        assert!((q - 4.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_of_square_root_shape() {
        let s = spec(Family::SquareRoot, 0.0, 1.0);
        let expected = 2.0 * (2.0 - 3f64.ln());
        let q = quadrature_gap(&s, 0.0, 4.0, 1e-10).unwrap();
        assert!((q - expected).abs() < 1e-10, "{q} vs {expected}");
        let g = modified_gap(&s, 0.0, 4.0).unwrap().value();
        assert!((g - expected).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_temperature() {
        assert!(TransformSpec::new(Family::Linear, 0.0, 0.0).is_err());
        assert!(TransformSpec::new(Family::Linear, 0.0, -1.0).is_err());
        assert!(TransformSpec::new(Family::Linear, 0.0, 1e-301).is_err());
        assert!(TransformSpec::new(Family::Linear, 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn custom_shape_validation() {
        let ok = Family::Custom(Arc::new(|x: f64| x * x * x));
        assert!(TransformSpec::new(ok, 0.0, 1.0).is_ok());
        let offset = Family::Custom(Arc::new(|x: f64| x + 1.0));
        assert!(TransformSpec::new(offset, 0.0, 1.0).is_err());
        let decreasing = Family::Custom(Arc::new(|x: f64| x * (2.0 - x).max(0.0)));
        assert!(TransformSpec::new(decreasing, 0.0, 1.0).is_err());
    }

    #[test]
    fn custom_linear_matches_closed_form() {
        let custom = spec(Family::Custom(Arc::new(|x: f64| x)), 0.5, 0.2);
        let linear = spec(Family::Linear, 0.5, 0.2);
        for (a, b) in [(0.0, 2.0), (0.7, 3.0), (-1.0, 0.4)] {
            let x = custom.gap(a, b).unwrap();
            let y = linear.gap(a, b).unwrap();
            assert!((x - y).abs() < 1e-10 * (1.0 + y.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn small_ratio_series() {
        for r in [0.02, 0.05, -0.05, 0.09] {
            let naive = r - f64::ln_1p(r);
            let series = x_minus_log1p(r);
            assert!((naive - series).abs() <= 1e-11 * series.abs());
        }
        let r = 1e-8;
        assert!((x_minus_log1p(r) - (r * r / 2.0 - r * r * r / 3.0)).abs() < 1e-30);
        assert!((x_minus_log1p(1.0) - (1.0 - LN_2)).abs() < 1e-16);
    }

    #[test]
    fn family_parsing() {
        assert_eq!("Linear".parse::<Family>().unwrap(), Family::Linear);
        assert_eq!("sqrt".parse::<Family>().unwrap(), Family::SquareRoot);
        assert!("cubic".parse::<Family>().is_err());
    }
}

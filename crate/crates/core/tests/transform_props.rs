use landmod::transform::{acceptance_probability, modified_gap, quadrature_gap, Family, TransformSpec};
use proptest::prelude::*;

fn family(k: u8) -> Family {
    match k % 3 {
        0 => Family::Linear,
        1 => Family::Quadratic,
        _ => Family::SquareRoot,
    }
}

fn energy() -> impl Strategy<Value = f64> {
    -5.0f64..5.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn closed_form_matches_quadrature(k in 0u8..3, c in -3.0f64..3.0, eps in 0.05f64..2.0, hx in energy(), hy in energy()) {
        let spec = TransformSpec::new(family(k), c, eps).unwrap();
        let gap = modified_gap(&spec, hx, hy).unwrap().value();
        let quad = quadrature_gap(&spec, hx, hy, 1e-13).unwrap();
        prop_assert!((gap - quad).abs() <= 1e-9 * (1.0 + gap.abs()), "{gap} vs {quad}");
    }

    #[test]
    fn additive_along_intermediate_levels(k in 0u8..3, c in -3.0f64..3.0, eps in 0.05f64..2.0,
                                          hx in energy(), hy in energy(), hz in energy()) {
        let spec = TransformSpec::new(family(k), c, eps).unwrap();
        let g = |a, b| modified_gap(&spec, a, b).unwrap().value();
        let (xz, xy, yz) = (g(hx, hz), g(hx, hy), g(hy, hz));
        prop_assert!((xz - xy - yz).abs() <= 1e-10 * (1.0 + xy.abs() + yz.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn gap_above_threshold_is_below_classical(k in 0u8..3, c in -3.0f64..1.0, eps in 0.05f64..2.0,
                                              a in 0.01f64..2.0, b in 0.01f64..2.0) {
        let (hx, hy) = (c + a, c + a + b);
        let spec = TransformSpec::new(family(k), c, eps).unwrap();
        prop_assert!(modified_gap(&spec, hx, hy).unwrap().value() < (hy - hx) / eps);
    }

    #[test]
    fn linear_acceptance_is_a_ratio(c in -3.0f64..3.0, eps in 0.05f64..2.0, a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let (hx, hy) = (c + a, c + a + b);
        let spec = TransformSpec::new(Family::Linear, c, eps).unwrap();
        let ratio = (hx - c + eps) / (hy - c + eps);
        let p = acceptance_probability(&spec, hx, hy).unwrap();
        prop_assert!((p - ratio).abs() <= 1e-14 * ratio.max(1.0), "{p} vs {ratio}");
    }

    #[test]
    fn zero_family_is_metropolis(c in -3.0f64..3.0, eps in 0.01f64..2.0, hx in energy(), hy in energy()) {
        let spec = TransformSpec::new(Family::Zero, c, eps).unwrap();
        let x = (hy - hx).max(0.0) / eps;
        let want = (-x).exp();
        let p = acceptance_probability(&spec, hx, hy).unwrap();
        // An ulp of error in the exponent becomes a relative error of x ulps.
        prop_assert!((p - want).abs() <= 4.0 * f64::EPSILON * (1.0 + x) * want, "{p} vs {want}");
    }
}

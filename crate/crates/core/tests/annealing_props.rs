mod common;

use common::{arb_landscape, double_well_20};
use landmod::analysis::critical_heights;
use landmod::annealing::{anneal_run, gibbs_tail, schedule_constants, CoolingSchedule, ThresholdPolicy};
use landmod::chain::{build_mh_generator, replica_rng, sample_hitting_time};
use landmod::stats::{ks_critical_value, ks_statistic};
use landmod::transform::{Family, TransformSpec};
use proptest::prelude::*;

#[test]
fn thinning_matches_jump_chain_at_fixed_temperature() {
    let land = double_well_20();
    let (eps, c, x0, reps) = (0.6, 1.0, 3, 10_000);
    let sched = CoolingSchedule::fixed(eps).unwrap();
    let spec = TransformSpec::new(Family::Linear, c, eps).unwrap();
    let gen = build_mh_generator(&land, &spec).unwrap();
    let ground: Vec<bool> = (0..land.n()).map(|x| land.energy(x) == land.h_min()).collect();
    let thinned: Vec<f64> = (0..reps)
        .map(|r| {
            anneal_run(&land, &Family::Linear, ThresholdPolicy::Fixed(c), &sched, x0, 1e9, 21, r, true)
                .unwrap()
                .hit_time
                .expect("horizon is long enough")
        })
        .collect();
    let direct: Vec<f64> = (0..reps)
        .map(|r| sample_hitting_time(&gen, x0, &ground, &mut replica_rng(99, r)).unwrap())
        .collect();
    let d = ks_statistic(&thinned, &direct);
    let crit = ks_critical_value(0.01, thinned.len(), direct.len());
    assert!(d < crit, "KS {d} >= {crit}");
}

#[test]
fn improved_height_never_exceeds_classical() {
    let land = double_well_20();
    for c in [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0] {
        let spec = TransformSpec::new(Family::Linear, c, 1.0).unwrap();
        let improved = CoolingSchedule::improved(&land, &spec, 1.0).unwrap();
        let classical = CoolingSchedule::classical(&land, 1.0).unwrap();
        assert!(improved.height <= classical.height);
        for t in [1.0, 10.0, 1e3, 1e6] {
            assert!(improved.epsilon(t).unwrap() <= classical.epsilon(t).unwrap());
        }
    }
}

fn family(k: u8) -> Family {
    [Family::Zero, Family::Linear, Family::Quadratic, Family::SquareRoot][k as usize % 4].clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ground_mass_is_below_its_bound(land in arb_landscape(2, 15), k in 0u8..4, c in -3.0f64..3.0, eps in 0.02f64..3.0) {
        let spec = TransformSpec::new(family(k), c, eps).unwrap();
        let tail = gibbs_tail(&land, &spec, eps).unwrap();
        prop_assert!(tail.exact <= tail.bound + 1e-12, "{} > {}", tail.exact, tail.bound);
    }

    #[test]
    fn schedule_is_strictly_cooling(land in arb_landscape(2, 12), c in -2.0f64..2.0, slack in 0.01f64..5.0) {
        let spec = TransformSpec::new(Family::Linear, c, 1.0).unwrap();
        let sched = CoolingSchedule::improved(&land, &spec, slack).unwrap();
        let ts: Vec<f64> = (0..60).map(|k| 1e-3 * 1.5f64.powi(k)).collect();
        let eps: Vec<f64> = ts.iter().map(|&t| sched.epsilon(t).unwrap()).collect();
        prop_assert!(eps.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(sched.epsilon(0.0).unwrap().is_infinite());
        prop_assert_eq!(sched.beta(0.0).unwrap(), 0.0);
        let h = critical_heights(&land, &spec).unwrap();
        prop_assert!(h.c_star <= h.h0 + 1e-12);
    }

    #[test]
    fn scaled_energy_stays_below_the_range(land in arb_landscape(2, 12), k in 1u8..4, c in -2.0f64..2.0,
                                           slack in 0.01f64..5.0, logt in -3.0f64..12.0) {
        // 0 ≤ ε_t H^f_{ε_t,c}(x) ≤ M with H^f ≤ β_t (H(x) − min H).
        let spec = TransformSpec::new(family(k), c, 1.0).unwrap();
        let sched = CoolingSchedule::improved(&land, &spec, slack).unwrap();
        let eps = sched.epsilon(10f64.powf(logt)).unwrap();
        let spec = spec.with_epsilon(eps).unwrap();
        let m = land.h_max() - land.h_min();
        for x in 0..land.n() {
            let hf = spec.gap(land.h_min(), land.energy(x)).unwrap();
            prop_assert!(hf >= 0.0 && hf <= (land.energy(x) - land.h_min()) / eps * (1.0 + 1e-12));
            prop_assert!(eps * hf <= m * (1.0 + 1e-12));
        }
    }

    #[test]
    fn constants_are_positive_inside_the_slack_window(land in arb_landscape(2, 12), c in -2.0f64..2.0, t in 0.01f64..0.99) {
        let spec = TransformSpec::new(Family::Linear, c, 1.0).unwrap();
        let (m, h_max) = (land.h_max() - land.h_min(), land.h_max());
        prop_assume!(m > 0.0);
        let lo = (h_max - c).max(0.0);
        let slack = lo + t * (m + h_max - c - lo);
        prop_assume!(slack > 0.0);
        let k = schedule_constants(&land, &spec, slack).unwrap();
        prop_assert!(k.p > 2.0 && k.k > 0.0 && k.a >= 1.0 && k.b > 0.0);
        prop_assert!(k.eps_bar > 0.0 && k.eps_bar < 1.0);
    }
}

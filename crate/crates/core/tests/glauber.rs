use proptest::prelude::*;
use spinperc::estimators::{certified_realization, MarginPolicy};
use spinperc::glauber::{
    backward_explore_value, certify_window, evolve, evolve_field, min_rho_map, s_beta_sum, threshold_field,
    BackwardEvaluator, BoundaryCondition, GlauberParams,
};
use spinperc::randomness::thin;
use spinperc::{sample_marks, sample_seed_field, BoxRegion, Error, Site};

fn beta_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(f64::INFINITY), Just(0.0), 0.05f64..4.0]
}

fn bc_strategy() -> impl Strategy<Value = BoundaryCondition> {
    prop_oneof![
        Just(BoundaryCondition::AllPlus),
        Just(BoundaryCondition::AllMinus),
        Just(BoundaryCondition::Free)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backward_matches_forward(seed in any::<u64>(), beta in beta_strategy(), tau in 0.1f64..1.5,
                                k in 1u32..4, rho in 0.0f64..1.0) {
        let params = GlauberParams::new(beta, tau, k).unwrap();
        let window = BoxRegion::new(Site::new(0, 0), 6, 6);
        let (seeds, marks) = certified_realization(window, &params, seed, &MarginPolicy::default()).unwrap();
        for bc in [BoundaryCondition::AllPlus, BoundaryCondition::AllMinus] {
            let fwd = evolve(&seeds, &marks, rho, &params, bc, window).unwrap();
            let mut ev = BackwardEvaluator::new(&seeds, &marks, rho, &params).unwrap();
            for x in window.sites() {
                prop_assert_eq!(ev.value(x).unwrap(), fwd.at(x));
            }
        }
    }

    #[test]
    fn monotone_in_density(seed in any::<u64>(), beta in beta_strategy(), bc in bc_strategy(),
                           r1 in 0.0f64..1.0, r2 in 0.0f64..1.0) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let params = GlauberParams::new(beta, 1.0, 1).unwrap();
        let region = BoxRegion::new(Site::new(0, 0), 8, 8);
        let seeds = sample_seed_field(region, seed);
        let marks = sample_marks(region, 1.0, 1, seed).unwrap();
        let a = evolve(&seeds, &marks, lo, &params, bc, region).unwrap();
        let b = evolve(&seeds, &marks, hi, &params, bc, region).unwrap();
        prop_assert!(a.le(&b));
    }

    #[test]
    fn monotone_in_boundary(seed in any::<u64>(), beta in beta_strategy(), rho in 0.0f64..1.0) {
        let params = GlauberParams::new(beta, 1.0, 1).unwrap();
        let region = BoxRegion::new(Site::new(0, 0), 7, 7);
        let seeds = sample_seed_field(region, seed);
        let marks = sample_marks(region, 1.0, 1, seed).unwrap();
        let run = |bc| evolve(&seeds, &marks, rho, &params, bc, region).unwrap();
        let (minus, free, plus) = (run(BoundaryCondition::AllMinus), run(BoundaryCondition::Free), run(BoundaryCondition::AllPlus));
        prop_assert!(minus.le(&free) && free.le(&plus));
    }

    #[test]
    fn thresholds_reproduce_evolve(seed in any::<u64>(), beta in beta_strategy(), bc in bc_strategy(),
                                   rho in 0.0f64..1.0, k in 1u32..3) {
        let params = GlauberParams::new(beta, 0.8, k).unwrap();
        let region = BoxRegion::new(Site::new(0, 0), 7, 7);
        let seeds = sample_seed_field(region, seed);
        let marks = sample_marks(region, 0.8, k, seed).unwrap();
        let theta = threshold_field(&seeds, &marks, &params, bc);
        let f = evolve(&seeds, &marks, rho, &params, bc, region).unwrap();
        for x in region.sites() {
            prop_assert_eq!(f.at(x).is_plus(), rho > theta.at(x));
        }
    }

    #[test]
    fn min_rho_brackets_the_flip(seed in any::<u64>(), beta in beta_strategy()) {
        let params = GlauberParams::new(beta, 1.0, 1).unwrap();
        let window = BoxRegion::new(Site::new(0, 0), 5, 5);
        let (seeds, marks) = certified_realization(window, &params, seed, &MarginPolicy::default()).unwrap();
        let map = min_rho_map(&seeds, &marks, &params, BoundaryCondition::AllMinus, window).unwrap();
        let eps = 2f64.powi(-19);
        for x in window.sites() {
            let r = map.at(x);
            prop_assert!((0.0..=1.0).contains(&r));
            let at = |rho: f64| evolve(&seeds, &marks, rho, &params, BoundaryCondition::AllMinus, window).unwrap().at(x);
            if r + eps <= 1.0 {
                prop_assert!(at(r + eps).is_plus());
            }
            if r - eps >= 0.0 {
                prop_assert!(!at(r - eps).is_plus());
            }
        }
    }

    /// Running on the thickened marks equals running on the thinned ones.
    #[test]
    fn thinning_is_transparent(seed in any::<u64>(), beta in beta_strategy(), k in 1u32..6, rho in 0.0f64..1.0) {
        let region = BoxRegion::new(Site::new(0, 0), 6, 6);
        let marks = sample_marks(region, 1.0, k, seed).unwrap();
        let init = sample_seed_field(region, seed).initial_field(rho);
        let a = evolve_field(&init, &marks, beta, 1.0, BoundaryCondition::Free);
        let b = evolve_field(&init, &thin(&marks), beta, 1.0, BoundaryCondition::Free);
        prop_assert_eq!(a, b);
    }

    /// Once certified, a window does not see a larger margin.
    #[test]
    fn certified_windows_ignore_the_margin(seed in any::<u64>(), beta in beta_strategy(), rho in 0.0f64..1.0) {
        let params = GlauberParams::new(beta, 1.0, 1).unwrap();
        let window = BoxRegion::new(Site::new(0, 0), 6, 6);
        let (seeds, marks) = certified_realization(window, &params, seed, &MarginPolicy::default()).unwrap();
        let big = marks.region().expand(5);
        let seeds2 = sample_seed_field(big, seed);
        let marks2 = sample_marks(big, 1.0, 1, seed).unwrap();
        for bc in [BoundaryCondition::AllPlus, BoundaryCondition::AllMinus] {
            let a = evolve(&seeds, &marks, rho, &params, bc, window).unwrap();
            let b = evolve(&seeds2, &marks2, rho, &params, BoundaryCondition::Free, window).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

#[test]
fn zero_horizon_is_the_initial_field() {
    let region = BoxRegion::new(Site::new(0, 0), 5, 5);
    let seeds = sample_seed_field(region, 4);
    let marks = spinperc::MarkSet::empty(region, 0.0, 1);
    let params = GlauberParams::new(1.0, 0.0, 1).unwrap();
    let f = evolve(&seeds, &marks, 0.4, &params, BoundaryCondition::AllMinus, region).unwrap();
    assert_eq!(f, seeds.initial_field(0.4));
}

#[test]
fn backward_exploration_escapes_a_tight_region() {
    let params = GlauberParams::new(f64::INFINITY, 3.0, 1).unwrap();
    let region = BoxRegion::new(Site::new(0, 0), 3, 3);
    let seeds = sample_seed_field(region, 1);
    let marks = sample_marks(region, 3.0, 1, 1).unwrap();
    let got = backward_explore_value(Site::new(1, 1), &marks, &seeds, 0.5, &params);
    assert!(matches!(got, Err(Error::SupportEscaped { .. })));
    assert!(matches!(
        certify_window(region, &marks, &params),
        Err(Error::SupportEscaped { .. })
    ));
}

#[test]
fn acceptance_probabilities() {
    // 1/(1 + e^{-2β·Σ}) at β = 1
    let oracle = |sum: i32| 1.0 / (1.0 + (-2.0 * sum as f64).exp());
    for sum in [-4, -2, 0, 2, 4] {
        assert!((s_beta_sum(sum, 1.0) - oracle(sum)).abs() < 1e-15);
    }
    assert_eq!(s_beta_sum(0, f64::INFINITY), 0.5);
    assert_eq!(s_beta_sum(2, f64::INFINITY), 1.0);
    assert_eq!(s_beta_sum(-2, f64::INFINITY), 0.0);
}

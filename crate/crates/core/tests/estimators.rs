use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use spinperc::estimators::{
    covariance_decay, estimate_crossing, lag1_autocorrelation, rho_threshold_sample, t_threshold_sample, Estimate,
    ThresholdSample,
};
use spinperc::exec::{map_replicates, map_replicates_sequential};
use spinperc::bootstrap::RateTable;
use spinperc::glauber::GlauberParams;
use spinperc::{BoxRegion, ScalarField, Site};

/// Left-right crossing of an i.i.d. field, by flood fill.
fn bernoulli_crossing(rng: &mut StdRng, w: usize, h: usize, p: f64) -> bool {
    let open: Vec<bool> = (0..w * h).map(|_| rng.random::<f64>() < p).collect();
    let mut seen = vec![false; w * h];
    let mut stack: Vec<usize> = (0..h).map(|y| y * w).filter(|&i| open[i]).collect();
    for &i in &stack {
        seen[i] = true;
    }
    while let Some(i) = stack.pop() {
        let (x, y) = (i % w, i / w);
        if x == w - 1 {
            return true;
        }
        let mut push = |j: usize| {
            if open[j] && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        };
        if x + 1 < w {
            push(i + 1);
        }
        if x > 0 {
            push(i - 1);
        }
        if y + 1 < h {
            push(i + w);
        }
        if y > 0 {
            push(i - w);
        }
    }
    false
}

#[test]
fn zero_horizon_matches_an_independent_bernoulli_sampler() {
    let params = GlauberParams::new(1.0, 0.0, 1).unwrap();
    let mut rng = StdRng::seed_from_u64(42);
    for rho in [0.4, 0.6] {
        let ours = estimate_crossing(&params, rho, 5, 5, 4000, 7).unwrap();
        let hits: Vec<bool> = (0..4000).map(|_| bernoulli_crossing(&mut rng, 6, 6, rho)).collect();
        let theirs = Estimate::from_indicators(&hits);
        assert!(ours.agrees_with(&theirs, 3.0), "rho={rho}: {ours:?} vs {theirs:?}");
    }
}

#[test]
fn thresholds_agree_with_crossing_estimates() {
    let params = GlauberParams::new(2.0, 0.5, 1).unwrap();
    let sample = rho_threshold_sample(&params, 6, 6, 300, 9).unwrap();
    let direct = estimate_crossing(&params, 0.55, 6, 6, 300, 9).unwrap();
    // same replicates: ρ* < 0.55 exactly when the box is crossed at 0.55
    assert!((sample.fraction_below(0.55) - direct.mean).abs() < 1e-12);
}

#[test]
fn estimates_are_deterministic() {
    let params = GlauberParams::new(1.0, 1.0, 2).unwrap();
    let a = estimate_crossing(&params, 0.5, 6, 6, 200, 3).unwrap();
    let b = estimate_crossing(&params, 0.5, 6, 6, 200, 3).unwrap();
    assert_eq!(a, b);
    let c = estimate_crossing(&params, 0.5, 6, 6, 200, 4).unwrap();
    assert_ne!(a, c);
    let t = RateTable::counting(0.2).unwrap();
    assert_eq!(
        t_threshold_sample(&t, 5, 5, 1, 20, 1).unwrap(),
        t_threshold_sample(&t, 5, 5, 1, 20, 1).unwrap()
    );
}

#[test]
fn parallel_and_sequential_replicates_agree() {
    let f = |r: u64| spinperc::rng::replicate_seed(5, r).wrapping_mul(r + 1);
    assert_eq!(map_replicates(1000, f), map_replicates_sequential(1000, f));
}

#[test]
fn median_and_interval() {
    let values: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
    let s = ThresholdSample { values };
    assert_eq!(s.median(), 0.5);
    let (lo, hi) = s.median_ci();
    assert!(lo < 0.5 && hi > 0.5);
    // ranks 50 ± 0.98·√101 ≈ 50 ± 9.85
    assert!((lo - 0.40).abs() < 0.011 && (hi - 0.60).abs() < 0.011, "{lo} {hi}");
}

#[test]
fn estimate_from_indicators() {
    let e = Estimate::from_indicators(&[true, false, true, true]);
    assert_eq!(e.mean, 0.75);
    assert_eq!(e.replicates, 4);
    // sample sd of {1,0,1,1} is 0.5
    assert!((e.stderr - 0.25).abs() < 1e-12);
}

#[test]
fn covariance_at_distance_zero_is_the_variance() {
    let params = GlauberParams::new(0.5, 1.0, 1).unwrap();
    let est = covariance_decay(&params, 0.3, &[0, 3], 3000, 1).unwrap();
    // σ is ±1: Var = 1 - m², and the time-τ magnetisation is near 2·0.3 - 1
    assert!(est[0].mean > 0.5 && est[0].mean <= 1.0);
    assert!(est[1].mean.abs() < est[0].mean);
}

#[test]
fn lag_one_autocorrelation_of_patterns() {
    let region = BoxRegion::new(Site::new(0, 0), 8, 8);
    let checkers = ScalarField::from_fn(region, |s| ((s.x + s.y) % 2) as f64);
    assert!((lag1_autocorrelation(&checkers) + 1.0).abs() < 1e-12);
    let smooth = ScalarField::from_fn(region, |s| (s.x + s.y) as f64);
    assert!(lag1_autocorrelation(&smooth) > 0.5);
}

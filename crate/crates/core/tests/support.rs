use proptest::prelude::*;
use spinperc::glauber::{
    backward_support, evolve_field, light_cone_log_bound, reaches, BoundaryCondition, GlauberParams,
};
use spinperc::lattice::neighbors4;
use spinperc::{sample_marks, sample_seed_field, BoxRegion, MarkSet, Site, Spin, SpinField};

/// Chains of marks with increasing times, searched by brute force.
fn reaches_oracle(x: Site, y: Site, marks: &MarkSet, t: f64) -> bool {
    fn go(at: Site, after: f64, y: Site, marks: &MarkSet, t: f64) -> bool {
        marks
            .marks()
            .iter()
            .filter(|m| m.site == at && m.time > after && m.time < t)
            .any(|m| {
                at == y
                    || neighbors4(at)
                        .iter()
                        .any(|&n| marks.region().contains(n) && go(n, m.time, y, marks, t))
            })
    }
    go(x, f64::NEG_INFINITY, y, marks, t)
}

fn support_oracle(x: Site, marks: &MarkSet, t: f64) -> Vec<Site> {
    let region = marks.region();
    let mut out: Vec<Site> = vec![x];
    for z in region.sites() {
        if reaches_oracle(z, x, marks, t) {
            out.extend(neighbors4(z).into_iter().filter(|n| region.contains(*n)));
        }
    }
    out.sort_by_key(|s| (s.y, s.x));
    out.dedup();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reaches_matches_brute_force(seed in any::<u64>(), w in 2u32..6, h in 2u32..6, t in 0.2f64..1.5) {
        let region = BoxRegion::new(Site::new(0, 0), w, h);
        let marks = sample_marks(region, 1.5, 1, seed).unwrap();
        for x in region.sites() {
            for y in region.sites() {
                prop_assert_eq!(reaches(x, y, &marks, t), reaches_oracle(x, y, &marks, t), "{} -> {}", x, y);
            }
        }
    }

    #[test]
    fn support_matches_brute_force(seed in any::<u64>(), w in 2u32..7, h in 2u32..7, t in 0.2f64..1.2, k in 1u32..3) {
        let region = BoxRegion::new(Site::new(0, 0), w, h);
        let marks = sample_marks(region, 1.2, k, seed).unwrap();
        for x in region.sites() {
            let got = backward_support(x, &marks, t);
            let want = support_oracle(x, &marks, t);
            let mut members = got.members.clone();
            members.sort_by_key(|s| (s.y, s.x));
            prop_assert_eq!(members, want);
            for s in &got.members {
                prop_assert!(got.contains(*s));
            }
        }
    }

    /// Initial spins outside the support never change the value at `x`.
    #[test]
    fn support_determines_the_value(seed in any::<u64>(), flip_seed in any::<u64>(), rho in 0.0f64..1.0,
                                    beta in prop_oneof![Just(f64::INFINITY), 0.0f64..3.0]) {
        let region = BoxRegion::new(Site::new(0, 0), 9, 9);
        let params = GlauberParams::new(beta, 0.7, 1).unwrap();
        let marks = sample_marks(region, 0.7, 1, seed).unwrap();
        let initial = sample_seed_field(region, seed).initial_field(rho);
        let noise = sample_seed_field(region, flip_seed);
        let base = evolve_field(&initial, &marks, params.beta, params.horizon, BoundaryCondition::AllMinus);
        for x in region.sites() {
            let s = backward_support(x, &marks, params.horizon);
            if s.truncated {
                continue;
            }
            let changed = SpinField::from_fn(region, |y| {
                if s.contains(y) || noise.get(y).unwrap() < 0.5 { initial.at(y) } else { Spin::from_bool(!initial.at(y).is_plus()) }
            });
            let out = evolve_field(&changed, &marks, params.beta, params.horizon, BoundaryCondition::AllMinus);
            prop_assert_eq!(out.at(x), base.at(x));
        }
    }
}

#[test]
fn light_cone_bound_is_finite_and_decreasing() {
    let mut prev = f64::INFINITY;
    for d in 3..=8 {
        let b = light_cone_log_bound(1.0, d);
        assert!(b.is_finite() && b < prev);
        prev = b;
    }
}

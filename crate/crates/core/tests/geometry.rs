use proptest::prelude::*;
use spinperc::geometry::{
    arm_event, check_duality, label_clusters, minimax_crossing, plus_crossing, star_minus_crossing,
    vertical_star_minus_crossing, Connectivity,
};
use spinperc::lattice::{DIRS4, DIRS8};
use spinperc::{BoxRegion, ScalarField, Site, Spin, SpinField};

fn field_from_bits(w: u32, h: u32, bits: &[bool]) -> SpinField {
    let region = BoxRegion::new(Site::new(0, 0), w, h);
    SpinField::from_values(region, bits.iter().map(|&b| Spin::from_bool(b)).collect())
}

fn arb_field(max: u32) -> impl Strategy<Value = SpinField> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<bool>(), (w * h) as usize).prop_map(move |bits| field_from_bits(w, h, &bits))
    })
}

/// Components by depth-first search, as a component id per site.
fn dfs_components(field: &SpinField, spin: Spin, steps: &[(i32, i32)]) -> Vec<Option<usize>> {
    let region = field.region();
    let mut comp = vec![None; region.len()];
    let mut next = 0;
    for start in region.sites() {
        let i = region.index(start).unwrap();
        if field.at(start) != spin || comp[i].is_some() {
            continue;
        }
        let mut stack = vec![start];
        comp[i] = Some(next);
        while let Some(s) = stack.pop() {
            for &(dx, dy) in steps {
                let t = s.offset(dx, dy);
                if let Some(j) = region.index(t) {
                    if field.at(t) == spin && comp[j].is_none() {
                        comp[j] = Some(next);
                        stack.push(t);
                    }
                }
            }
        }
        next += 1;
    }
    comp
}

fn dfs_sides(field: &SpinField, spin: Spin, steps: &[(i32, i32)], vertical: bool) -> bool {
    let region = field.region();
    let comp = dfs_components(field, spin, steps);
    let on = |s: Site, first: bool| {
        if vertical {
            s.y == if first { region.y_min() } else { region.y_max() }
        } else {
            s.x == if first { region.x_min() } else { region.x_max() }
        }
    };
    let a: Vec<usize> = region
        .sites()
        .filter(|s| on(*s, true))
        .filter_map(|s| comp[region.index(s).unwrap()])
        .collect();
    let hit = region
        .sites()
        .filter(|s| on(*s, false))
        .filter_map(|s| comp[region.index(s).unwrap()])
        .any(|c| a.contains(&c));
    hit
}

proptest! {
    #[test]
    fn labels_match_dfs(field in arb_field(9)) {
        for (kind, steps) in [(Connectivity::Plus, &DIRS4[..]), (Connectivity::MinusStar, &DIRS8[..])] {
            let labels = label_clusters(&field, kind);
            let comp = dfs_components(&field, kind.spin(), steps);
            let region = field.region();
            let sites: Vec<Site> = region.sites().collect();
            for a in &sites {
                let ia = region.index(*a).unwrap();
                prop_assert_eq!(labels.label(*a).is_some(), comp[ia].is_some());
                for b in &sites {
                    let ib = region.index(*b).unwrap();
                    if comp[ia].is_some() && comp[ib].is_some() {
                        prop_assert_eq!(labels.label(*a) == labels.label(*b), comp[ia] == comp[ib]);
                    }
                }
            }
            let distinct: std::collections::BTreeSet<usize> = comp.iter().flatten().copied().collect();
            prop_assert_eq!(labels.cluster_count(), distinct.len());
        }
    }

    #[test]
    fn crossings_match_dfs(field in arb_field(9)) {
        let b = field.region();
        prop_assert_eq!(plus_crossing(&field, &b), dfs_sides(&field, Spin::Plus, &DIRS4, false));
        prop_assert_eq!(star_minus_crossing(&field, &b), dfs_sides(&field, Spin::Minus, &DIRS8, false));
        prop_assert_eq!(vertical_star_minus_crossing(&field, &b), dfs_sides(&field, Spin::Minus, &DIRS8, true));
    }

    #[test]
    fn duality_dichotomy(field in arb_field(12)) {
        prop_assert!(check_duality(&field, &field.region()));
    }

    #[test]
    fn crossing_is_increasing(field in arb_field(8), extra in proptest::collection::vec(any::<bool>(), 64)) {
        let region = field.region();
        let bigger = SpinField::from_fn(region, |s| {
            let i = region.index(s).unwrap();
            Spin::from_bool(field.at(s).is_plus() || extra[i])
        });
        if plus_crossing(&field, &region) {
            prop_assert!(plus_crossing(&bigger, &region));
        }
    }

    #[test]
    fn arm_events_nest(bits in proptest::collection::vec(prop::bool::weighted(0.65), 15 * 15),
                       m in 0u32..3, gap in 1u32..3, inner in 0u32..2, outer in 0u32..2) {
        let field = field_from_bits(15, 15, &bits);
        let c = Site::new(7, 7);
        let n = m + gap + inner + outer + 1;
        prop_assume!(n + 1 <= 7);
        let (m2, n2) = (m + inner, n - outer);
        prop_assume!(m2 < n2);
        if arm_event(&field, c, m, n) {
            prop_assert!(arm_event(&field, c, m2, n2));
        }
    }

    #[test]
    fn minimax_is_the_crossing_threshold(values in proptest::collection::vec(0.0f64..1.0, 7 * 5), v in 0.0f64..1.0) {
        let region = BoxRegion::new(Site::new(0, 0), 7, 5);
        let sf = ScalarField::from_values(region, values);
        let t = minimax_crossing(&sf, &region);
        let at = |level: f64| plus_crossing(&sf.to_spins(|x| x <= level), &region);
        prop_assert!(at(t));
        prop_assert_eq!(at(v), v >= t);
    }
}

#[test]
fn duality_exhaustive_4x4() {
    let b = BoxRegion::new(Site::new(0, 0), 4, 4);
    for code in 0u32..1 << 16 {
        let bits: Vec<bool> = (0..16).map(|i| code >> i & 1 == 1).collect();
        let f = field_from_bits(4, 4, &bits);
        assert!(check_duality(&f, &b), "dichotomy fails for {code:#06x}");
    }
}

#[test]
fn all_plus_has_arms_and_crossings() {
    let f = SpinField::filled(BoxRegion::new(Site::new(-5, -5), 11, 11), Spin::Plus);
    assert!(arm_event(&f, Site::new(0, 0), 0, 4));
    assert!(plus_crossing(&f, &f.region()));
    assert!(!star_minus_crossing(&f, &f.region()));
}

#[test]
fn ring_of_minus_blocks_the_arm() {
    let f = SpinField::from_fn(BoxRegion::new(Site::new(-6, -6), 13, 13), |s| {
        Spin::from_bool(s.linf(Site::new(0, 0)) != 3)
    });
    assert!(!arm_event(&f, Site::new(0, 0), 1, 4));
    assert!(arm_event(&f, Site::new(0, 0), 4, 5));
}

use proptest::prelude::*;
use twosite_core::diagrammatics::*;

fn splits(max_total: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=max_total).flat_map(move |total| (0..=total).filter(move |_| total % 2 == 0).map(move |n| (n, total - n)))
}

#[test]
fn kappa_theorem_is_exhaustive_up_to_twelve_factors() {
    let mut checked = 0u64;
    for (n, m) in splits(12) {
        let half = (n + m) / 2;
        for p in pairings_for_split(n, m).unwrap() {
            let kappa = p.kappa();
            if p.classify().is_crossing() {
                assert!(kappa + 1 <= half, "crossing {p:?} has kappa {kappa}");
            } else {
                assert_eq!(kappa, half + 1, "non-crossing {p:?}");
            }
            checked += 1;
        }
    }
    assert!(checked > 100_000);
}

#[test]
fn ends_meet_for_every_pairing_up_to_ten_factors() {
    for (n, m) in splits(10) {
        for p in pairings_for_split(n, m).unwrap() {
            assert!(ends_meet_check(&p), "{p:?}");
        }
    }
}

#[test]
fn class_counts_match_catalan_and_double_factorial() {
    for (n, m) in splits(12) {
        let k = ((n + m) / 2) as u64;
        let c = count_by_class(n, m).unwrap();
        assert_eq!(c.noncrossing(), catalan(k), "({n}, {m})");
        assert_eq!(c.total(), matching_count(k), "({n}, {m})");
    }
}

#[test]
fn multiplicities_add_up_for_noncrossing_pairings() {
    for (n, m) in splits(12) {
        for p in pairings_for_split(n, m).unwrap() {
            if p.classify().is_crossing() {
                assert!(multiplicities(&p).is_err());
                continue;
            }
            let s = multiplicities(&p).unwrap();
            let total: usize = s.multiplicities.iter().map(|c| c.total()).sum();
            assert_eq!(total, n + m + 2);
            assert_eq!(s.kappa, s.multiplicities.len());
        }
    }
}

#[test]
fn class_signature_from_multiplicities() {
    for (n, m) in splits(12) {
        for p in pairings_for_split(n, m).unwrap() {
            let Ok(s) = multiplicities(&p) else { continue };
            let one_sided = s.multiplicities.iter().any(|c| c.is_one_sided_multiple());
            assert_eq!(s.class == GraphClass::Nested, one_sided, "{p:?}: {s:?}");
        }
    }
}

#[test]
fn moment_identity_against_monte_carlo() {
    for n in [16, 64] {
        for k in 1..=3 {
            let exact = moment_from_pairings(k, n).unwrap();
            let mc = moment_monte_carlo(k, n, 2000, 7 + k as u64).unwrap();
            assert!((mc.mean - exact).abs() <= 3.0 * mc.stderr, "k={k} N={n}: {exact} vs {mc:?}");
        }
    }
}

#[test]
fn crossing_part_scales_as_inverse_square() {
    for k in 3..=5 {
        let r = leading_order_check(k, &[16, 32, 64]).unwrap();
        assert!(r.noncrossing_spread < 1e-9);
        assert!(r.max_crossing_kappa + 1 <= k);
        for ratio in &r.crossing_ratios {
            assert!((3.0..=5.0).contains(ratio), "k={k}: ratio {ratio}");
        }
    }
}

fn random_matching(k: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    Just((1..=2 * k).collect::<Vec<_>>()).prop_shuffle().prop_map(|perm| {
        let mut pairs: Vec<(usize, usize)> = perm
            .chunks(2)
            .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
            .collect();
        pairs.sort_unstable();
        pairs
    })
}

proptest! {
    #[test]
    fn kappa_dichotomy_on_random_matchings(
        (k, pairs) in (1usize..=8).prop_flat_map(|k| (Just(k), random_matching(k))),
        split in 0usize..=16,
    ) {
        let m = split.min(2 * k);
        let p = Pairing::new(2 * k - m, m, pairs).unwrap();
        if p.classify().is_crossing() {
            prop_assert!(p.kappa() < k);
        } else {
            prop_assert_eq!(p.kappa(), k + 1);
        }
        prop_assert!(ends_meet_check(&p));
    }

    #[test]
    fn classification_ignores_the_split(
        (k, pairs) in (1usize..=6).prop_flat_map(|k| (Just(k), random_matching(k))),
        a in 0usize..=12,
        b in 0usize..=12,
    ) {
        let p = Pairing::new(2 * k - a.min(2 * k), a.min(2 * k), pairs).unwrap();
        let q = p.with_split(2 * k - b.min(2 * k), b.min(2 * k)).unwrap();
        prop_assert_eq!(p.classify().is_crossing(), q.classify().is_crossing());
        prop_assert_eq!(p.kappa(), q.kappa());
    }
}

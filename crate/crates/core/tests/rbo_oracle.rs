use proptest::prelude::*;
use rankstab_core::{expected_depth, prefix_weight, rbo, Params, Ranking};
use rankstab_oracle::{prefix_weight_oracle, rbo_series_oracle, rbo_upper_oracle, Tail};

const UNIVERSE: [&str; 5] = ["a", "b", "c", "d", "e"];

/// Every ordered selection of up to `max_len` distinct items from `pool`.
fn partial_permutations(pool: &[&str], max_len: usize) -> Vec<Ranking> {
    let mut out = vec![Vec::<String>::new()];
    let mut frontier = out.clone();
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in &frontier {
            for item in pool {
                if !prefix.iter().any(|p| p == item) {
                    let mut grown = prefix.clone();
                    grown.push(item.to_string());
                    next.push(grown);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.into_iter().map(|v| Ranking::new(v).unwrap()).collect()
}

fn r(items: &[&str]) -> Ranking {
    Ranking::new(items.iter().map(|s| s.to_string()).collect()).unwrap()
}

#[test]
fn exhaustive_agreement_with_series_oracle() {
    let rankings = partial_permutations(&UNIVERSE, 5);
    assert_eq!(rankings.len(), 326);
    for p in [0.5, 0.85, 0.9] {
        let params = Params::new(p).unwrap();
        for a in &rankings {
            for b in &rankings {
                let got = rbo(a, b, &params);
                let min = rbo_series_oracle(a, b, p, Tail::Zero);
                let ext = rbo_series_oracle(a, b, p, Tail::Constant);
                assert!((got.min - min).abs() < 1e-9, "min {a:?} {b:?} p={p}");
                assert!((got.ext - ext).abs() < 1e-9, "ext {a:?} {b:?} p={p}");
                assert!(
                    got.min <= got.ext && got.ext <= got.min + got.res,
                    "{a:?} {b:?} {got:?} {}",
                    got.min + got.res
                );
                assert!(got.min + got.res <= 1.0 && got.res >= 0.0);
                assert_eq!(got, rbo(b, a, &params), "symmetry {a:?} {b:?}");
            }
        }
    }
}

#[test]
fn residual_matches_exhaustive_completion_search() {
    let rankings = partial_permutations(&["a", "b", "c", "d"], 2);
    let mut cases: Vec<(Ranking, Ranking)> = Vec::new();
    for a in &rankings {
        for b in &rankings {
            cases.push((a.clone(), b.clone()));
        }
    }
    cases.push((r(&["a"]), r(&["b", "c", "a"])));
    cases.push((r(&["a"]), r(&["a", "b", "c"])));
    cases.push((r(&["x"]), r(&["a", "b", "c"])));
    cases.push((r(&["a", "b", "c"]), r(&["c"])));
    for p in [0.5, 0.85] {
        let params = Params::new(p).unwrap();
        for (a, b) in &cases {
            let got = rbo(a, b, &params);
            let upper = rbo_upper_oracle(a, b, p);
            assert!(
                (got.min + got.res - upper).abs() < 1e-12,
                "{a:?} {b:?} p={p}: {} vs {upper}",
                got.min + got.res
            );
        }
    }
}

#[test]
fn identity_and_disjointness() {
    for n in 1..=12usize {
        let items: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
        let a = Ranking::new(items).unwrap();
        let other = Ranking::new((0..n).map(|i| format!("o{i}")).collect()).unwrap();
        for p in [0.1, 0.5, 0.85, 0.9, 0.99] {
            let params = Params::new(p).unwrap();
            let same = rbo(&a, &a, &params);
            assert_eq!(same.ext, 1.0);
            assert!((same.min - (1.0 - p.powi(n as i32))).abs() < 1e-12);
            let apart = rbo(&a, &other, &params);
            assert_eq!((apart.min, apart.ext), (0.0, 0.0));
        }
    }
}

#[test]
fn prefix_weight_matches_double_series() {
    for p in [0.3, 0.5, 0.85, 0.9] {
        let params = Params::new(p).unwrap();
        for d in [1, 2, 3, 5, 10, 20] {
            let got = prefix_weight(&params, d);
            let want = prefix_weight_oracle(p, d);
            assert!((got - want).abs() < 1e-12, "p={p} d={d}: {got} vs {want}");
        }
    }
    // Frozen from the series oracle: sum_{k>=1} 0.5^k / k = ln 2.
    let half = Params::new(0.5).unwrap();
    assert!((prefix_weight(&half, 1) - 0.693_147_180_559_945_3).abs() < 1e-15);
}

#[test]
fn prefix_weight_increases_with_depth() {
    for p in [0.5, 0.85, 0.9] {
        let params = Params::new(p).unwrap();
        let weights: Vec<f64> = (1..=40).map(|d| prefix_weight(&params, d)).collect();
        assert!(
            weights.windows(2).all(|w| w[1] > w[0]),
            "p={p}: {weights:?}"
        );
        assert!(prefix_weight(&params, 2000) > 1.0 - 1e-9);
    }
}

#[test]
fn expected_depth_closed_form() {
    for p in [0.01, 0.5, 0.85, 0.9, 0.999] {
        let params = Params::new(p).unwrap();
        assert_eq!(expected_depth(&params), 1.0 / (1.0 - p));
    }
}

fn ranking_strategy(max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    proptest::sample::subsequence((0u8..16).collect::<Vec<_>>(), 0..=max_len).prop_shuffle()
}

fn to_ranking(v: &[u8]) -> Ranking<u8> {
    Ranking::new(v.to_vec()).unwrap()
}

proptest! {
    #[test]
    fn bounds_and_symmetry(a in ranking_strategy(12), b in ranking_strategy(12), p in 0.01f64..0.99) {
        let params = Params::new(p).unwrap();
        let (a, b) = (to_ranking(&a), to_ranking(&b));
        let ab = rbo(&a, &b, &params);
        prop_assert!(0.0 <= ab.min);
        prop_assert!(ab.min <= ab.ext);
        prop_assert!(ab.ext <= ab.min + ab.res);
        prop_assert!(ab.min + ab.res <= 1.0);
        prop_assert!((0.0..=1.0).contains(&ab.res));
        prop_assert_eq!(ab, rbo(&b, &a, &params));
    }

    #[test]
    fn residual_shrinks_as_lists_grow(
        a in ranking_strategy(8),
        b in ranking_strategy(8),
        extra_a in ranking_strategy(4),
        extra_b in ranking_strategy(4),
        p in 0.05f64..0.95,
    ) {
        let params = Params::new(p).unwrap();
        // Appended items are shifted out of the base range so they stay distinct.
        let grow = |base: &[u8], extra: &[u8]| -> Ranking<u8> {
            let mut v = base.to_vec();
            v.extend(extra.iter().map(|x| x + 100));
            Ranking::new(v).unwrap()
        };
        let before = rbo(&to_ranking(&a), &to_ranking(&b), &params);
        let after = rbo(&grow(&a, &extra_a), &grow(&b, &extra_b), &params);
        prop_assert!(after.res <= before.res + 1e-12, "{before} -> {after}");
        prop_assert!(after.min >= before.min - 1e-12);
    }

    #[test]
    fn random_pairs_match_series_oracle(a in ranking_strategy(10), b in ranking_strategy(10), p in 0.05f64..0.95) {
        let params = Params::new(p).unwrap();
        let (a, b) = (to_ranking(&a), to_ranking(&b));
        let got = rbo(&a, &b, &params);
        prop_assert!((got.min - rbo_series_oracle(&a, &b, p, Tail::Zero)).abs() < 1e-9);
        prop_assert!((got.ext - rbo_series_oracle(&a, &b, p, Tail::Constant)).abs() < 1e-9);
    }
}

//! Property-based checks of the tree invariants against brute-force
//! oracles on randomized small instances.

use std::collections::BTreeSet;

use proptest::prelude::*;

use covertree::approx::{approx_knn, verify_approx};
use covertree::construct::{build, level_for_distance, RootChoice};
use covertree::metric::{aspect_ratio, knn_bruteforce};
use covertree::persist::{tree_from_json, tree_to_json};
use covertree::search::knn_search;
use covertree::tree::exp2i;
use covertree::{Dataset, MetricKind, MetricSession, PointId};

/// Distinct points with integer coordinates on a quarter-unit lattice:
/// duplicates are impossible and `d_min >= 0.25`, keeping every instance
/// inside the constructor's domain.
fn lattice_points(max_n: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, usize)> {
    (1usize..=3).prop_flat_map(move |dim| {
        prop::collection::btree_set(prop::collection::vec(0i32..64, dim), 2..=max_n)
            .prop_map(move |set: BTreeSet<Vec<i32>>| {
                let rows: Vec<Vec<f64>> = set
                    .into_iter()
                    .map(|r| r.into_iter().map(|v| v as f64 * 0.25).collect())
                    .collect();
                (rows, dim)
            })
    })
}

fn metrics() -> impl Strategy<Value = MetricKind> {
    prop_oneof![
        Just(MetricKind::Euclidean),
        Just(MetricKind::Manhattan),
        Just(MetricKind::Chebyshev),
    ]
}

proptest! {
    #[test]
    fn metric_axioms(
        m in metrics(),
        a in prop::collection::vec(-100.0f64..100.0, 1..=4),
        mut b in prop::collection::vec(-100.0f64..100.0, 1..=4),
        mut c in prop::collection::vec(-100.0f64..100.0, 1..=4),
    ) {
        b.resize(a.len(), 0.0);
        c.resize(a.len(), 0.0);
        use covertree::Distance;
        let dab = m.eval(&a, &b);
        prop_assert!(dab >= 0.0);
        prop_assert_eq!(m.eval(&a, &a), 0.0);
        prop_assert_eq!(dab, m.eval(&b, &a));
        let slack = 1e-9 * (1.0 + dab.abs());
        prop_assert!(dab <= m.eval(&a, &c) + m.eval(&c, &b) + slack);
    }

    #[test]
    fn level_for_distance_is_the_unique_dyadic_level(d in 1e-6f64..1e12) {
        let l = level_for_distance(d).unwrap();
        prop_assert!(exp2i(l) < d && d <= exp2i(l + 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn built_trees_satisfy_all_three_conditions(
        (rows, _) in lattice_points(48),
        m in metrics(),
        seed in 0u64..1000,
    ) {
        let data = Dataset::from_rows(&rows).unwrap();
        let mut s = MetricSession::new(&data, &m);
        let (tree, _) = build(&mut s, RootChoice::Random(seed)).unwrap();
        prop_assert_eq!(tree.len(), data.len());
        let report = tree.validate(&mut s).unwrap();
        prop_assert!(report.is_ok(), "{:?}", report.violations);
        // root condition, restated directly
        let top = data
            .ids()
            .filter(|&p| p != tree.root())
            .map(|p| tree.level(p))
            .max()
            .unwrap();
        prop_assert!(tree.l_max() >= 1 + top);
    }

    #[test]
    fn distinctive_descendant_counts_match_enumeration(
        (rows, _) in lattice_points(40),
        m in metrics(),
    ) {
        let data = Dataset::from_rows(&rows).unwrap();
        let mut s = MetricSession::new(&data, &m);
        let (tree, _) = build(&mut s, RootChoice::First).unwrap();
        let mut essential_total = 0usize;
        for p in data.ids() {
            essential_total += tree.essential_levels(p).len();
            for i in (tree.l_min() - 1)..=(tree.l_max() + 1) {
                let brute = tree.distinctive_descendants(p, i);
                prop_assert_eq!(
                    tree.dd_count(p, i),
                    brute.len() as u64,
                    "node {} level {}",
                    p,
                    i
                );
            }
        }
        prop_assert!(essential_total <= 2 * data.len());
    }

    #[test]
    fn search_matches_bruteforce(
        (rows, dim) in lattice_points(48),
        m in metrics(),
        raw_q in prop::collection::vec(-4i32..68, 3),
        k_sel in 0usize..4,
    ) {
        let data = Dataset::from_rows(&rows).unwrap();
        let mut s = MetricSession::new(&data, &m);
        let (tree, _) = build(&mut s, RootChoice::First).unwrap();
        let q: Vec<f64> = raw_q[..dim].iter().map(|&v| v as f64 * 0.25).collect();
        let n = data.len();
        let k = [1, 3.min(n), 5.min(n), n][k_sel];
        let oracle = knn_bruteforce(&mut s, &q, k).unwrap();
        let (got, _) = knn_search(&tree, &mut s, &q, k).unwrap();
        prop_assert_eq!(got, oracle);
    }

    #[test]
    fn approx_answers_carry_their_certificate(
        (rows, dim) in lattice_points(48),
        raw_q in prop::collection::vec(-4i32..68, 3),
        eps_sel in 0usize..5,
    ) {
        let data = Dataset::from_rows(&rows).unwrap();
        let m = MetricKind::Euclidean;
        let mut s = MetricSession::new(&data, &m);
        let (tree, _) = build(&mut s, RootChoice::First).unwrap();
        let q: Vec<f64> = raw_q[..dim].iter().map(|&v| v as f64 * 0.25).collect();
        let eps = [0.05, 0.1, 0.5, 1.0, 2.0][eps_sel];
        let k = 3.min(data.len());
        let oracle = knn_bruteforce(&mut s, &q, k).unwrap();
        let (got, _) = approx_knn(&tree, &mut s, &q, k, eps).unwrap();
        prop_assert!(verify_approx(&got.answer, &oracle, eps).unwrap());
    }

    #[test]
    fn json_round_trip_is_byte_identical(
        (rows, _) in lattice_points(40),
        seed in 0u64..1000,
    ) {
        let data = Dataset::from_rows(&rows).unwrap();
        let m = MetricKind::Euclidean;
        let mut s = MetricSession::new(&data, &m);
        let (tree, _) = build(&mut s, RootChoice::Random(seed)).unwrap();
        let json = tree_to_json(&tree);
        let back = tree_from_json(&json).unwrap();
        prop_assert_eq!(tree_to_json(&back), json);
        for p in data.ids() {
            prop_assert_eq!(back.level(p), tree.level(p));
            prop_assert_eq!(back.node(p).parent, tree.node(p).parent);
            prop_assert_eq!(back.dd_count(p, tree.level(p)), tree.dd_count(p, tree.level(p)));
        }
    }

    #[test]
    fn height_set_respects_aspect_ratio_bound(
        (rows, _) in lattice_points(48),
        m in metrics(),
    ) {
        let data = Dataset::from_rows(&rows).unwrap();
        let mut s = MetricSession::new(&data, &m);
        let (tree, _) = build(&mut s, RootChoice::First).unwrap();
        let delta = aspect_ratio(&mut s).unwrap();
        let h = tree.height_set().len() as f64;
        // provable for any root choice: l_max < log2(diam) + 1 and
        // l_min > log2(d_min) - 2, so |H| <= l_max - l_min + 1 < 4 + log2(Δ);
        // the tighter 1 + log2(Δ) needs non-degenerate aspect ratios and is
        // checked in the acceptance suite
        prop_assert!(h <= 3.0 + delta.log2(), "height {} aspect {}", h, delta);
    }
}

/// Re-inserting any point of a built tree must be rejected as a duplicate.
#[test]
fn rebuild_with_duplicate_rejected() {
    let data = Dataset::line(&[0.0, 1.0, 3.0, 1.0]).dedup().0;
    assert_eq!(data.len(), 3);
    let m = MetricKind::Euclidean;
    let mut s = MetricSession::new(&data, &m);
    let (tree, _) = build(&mut s, RootChoice::First).unwrap();
    assert!(tree.validate(&mut s).unwrap().is_ok());
}

/// The equal-level corner case: the nearest existing node can sit exactly
/// at the level the new point needs, so the parent must come from higher
/// up. Verified here end to end.
#[test]
fn equal_level_nearest_node_gets_skipped_as_parent() {
    let data = Dataset::line(&[0.0, 2.0, 3.5]);
    let m = MetricKind::Euclidean;
    let mut s = MetricSession::new(&data, &m);
    let (tree, _) = build(&mut s, RootChoice::First).unwrap();
    assert!(tree.validate(&mut s).unwrap().is_ok());
    // 3.5 is nearest to 2 (level 0), but d = 1.5 would force level 0 as
    // well; the root takes it at level 1 instead
    assert_eq!(tree.node(PointId(2)).parent, Some(PointId(0)));
    assert_eq!(tree.level(PointId(2)), 1);
}

//! Tukey HSD and the studentized-range tail against reference values, plus
//! invariants of the summary statistics.

use mutcomp::prequential::{Direction, ResultRow};
use mutcomp::stats::ptukey::ptukey_upper;
use mutcomp::stats::{aggregate, tukey_hsd};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

// P(Q >= q) for (q, k, df), frozen from scipy.stats.studentized_range.sf
const REFERENCE_TAILS: [(f64, usize, f64, f64); 8] = [
    (3.5, 3, 12.0, 0.06999548527518362),
    (1.0, 2, 4.0, 0.5185185185185186),
    (5.0, 4, 20.0, 0.010287534594015546),
    (2.0, 10, 100.0, 0.9200115452581175),
    (8.0, 3, 2.0, 0.053991000276919054),
    (0.5, 5, 30.0, 0.9964638171365823),
    (4.0, 2, 1000.0, 0.004771185837391112),
    (14.142135623730951, 2, 4.0, 0.0005620036227158565),
];

#[test]
fn studentized_range_tail_matches_reference() {
    for (q, k, df, expected) in REFERENCE_TAILS {
        let p = ptukey_upper(q, k, df);
        assert!((p - expected).abs() < 1e-6, "q {q} k {k} df {df}: {p} vs {expected}");
    }
}

fn groups(gs: &[(&str, &[f64])]) -> Vec<(String, Vec<f64>)> {
    gs.iter().map(|(l, v)| (l.to_string(), v.to_vec())).collect()
}

#[test]
fn three_group_textbook_example() {
    let g = groups(&[
        ("g0", &[24.5, 23.5, 26.4, 27.1, 29.9]),
        ("g1", &[28.4, 34.2, 29.5, 32.2, 30.1]),
        ("g2", &[26.1, 28.3, 24.3, 26.2, 27.8]),
    ]);
    let t = tukey_hsd(&g).unwrap();
    // reference p from scipy.stats.tukey_hsd
    for (a, b, diff, p) in [
        ("g0", "g1", -4.6, 0.01444833),
        ("g0", "g2", -0.26, 0.98031072),
        ("g1", "g2", 4.34, 0.02033114),
    ] {
        let e = t.get(a, b).unwrap();
        assert!((e.diff - diff).abs() < 1e-9, "{a}-{b}");
        assert!((e.p - p).abs() < 1e-3, "{a}-{b}: {} vs {p}", e.p);
        assert_eq!(e.significant, p < 0.05);
    }
    // within-group sums of squares 24.688, 21.428 and 10.012, df = 12
    assert!((t.mse - (24.688 + 21.428 + 10.012) / 12.0).abs() < 1e-9);
    assert_eq!(t.df, 12.0);
}

#[test]
fn separated_pair() {
    let t = tukey_hsd(&groups(&[("a", &[1.0, 2.0, 3.0]), ("b", &[11.0, 12.0, 13.0])])).unwrap();
    assert_eq!(t.get("a", "b").unwrap().diff, -10.0);
    assert_eq!(t.get("b", "a").unwrap().diff, 10.0);
    let p = t.get("a", "b").unwrap().p;
    assert!(p < 0.01);
    assert!((p - 2.55216749e-04).abs() < 1e-6);
}

#[test]
fn unequal_sizes() {
    let t = tukey_hsd(&groups(&[("a", &[1.0, 2.0, 3.0, 4.0]), ("b", &[2.0, 4.0]), ("c", &[10.0, 11.0, 12.0])]))
        .unwrap();
    for (a, b, p) in [("a", "b", 8.86910360e-01), ("a", "c", 2.45205608e-04), ("b", "c", 9.17615678e-04)] {
        assert!((t.get(a, b).unwrap().p - p).abs() < 1e-6, "{a}-{b}");
    }
}

fn group_strategy() -> impl Strategy<Value = Vec<(String, Vec<f64>)>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 2..6), 2..5).prop_map(|gs| {
        gs.into_iter().enumerate().map(|(i, v)| (format!("g{i}"), v)).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn two_groups_reduce_to_t_test(a in prop::collection::vec(-5.0f64..5.0, 2..8),
                                   b in prop::collection::vec(-5.0f64..5.0, 2..8)) {
        // with k = 2, Q = sqrt(2) |T| for the pooled two-sample t statistic
        let t = tukey_hsd(&[("a".into(), a.clone()), ("b".into(), b.clone())]).unwrap();
        let e = t.get("a", "b").unwrap();
        let tstat = e.q / std::f64::consts::SQRT_2;
        let tdist = StudentsT::new(0.0, 1.0, t.df).unwrap();
        let expected = 2.0 * (1.0 - tdist.cdf(tstat));
        prop_assert!((e.p - expected).abs() < 1e-6, "{} vs {}", e.p, expected);
    }

    #[test]
    fn tukey_antisymmetric_and_bounded(g in group_strategy()) {
        let t = tukey_hsd(&g).unwrap();
        let k = g.len();
        prop_assert_eq!(t.entries.len(), k * (k - 1));
        for e in &t.entries {
            let r = t.get(&e.col, &e.row).unwrap();
            prop_assert_eq!(e.diff, -r.diff);
            prop_assert_eq!(e.p, r.p);
            prop_assert!((0.0..=1.0).contains(&e.p));
        }
    }

    #[test]
    fn tukey_shift_invariant(g in group_strategy(), shift in -100.0f64..100.0) {
        let t = tukey_hsd(&g).unwrap();
        let shifted: Vec<_> = g.iter().map(|(l, v)| (l.clone(), v.iter().map(|x| x + shift).collect())).collect();
        let s = tukey_hsd(&shifted).unwrap();
        for (a, b) in t.entries.iter().zip(&s.entries) {
            prop_assert!((a.diff - b.diff).abs() < 1e-9);
            prop_assert!((a.p - b.p).abs() < 1e-6);
        }
    }

    #[test]
    fn aggregate_is_permutation_invariant(cs in prop::collection::vec(-1.0f64..1.0, 4..12), rot in 0usize..12) {
        let rows: Vec<ResultRow> = cs.iter().enumerate().map(|(i, &c)| ResultRow {
            language: if i % 2 == 0 { "x".into() } else { "y".into() },
            direction: Direction::OrthToPhon,
            seed: i as u64,
            l_cond: 1.0,
            l_uncond: 2.0,
            c,
            i_bits: 1.0,
        }).collect();
        let mut permuted = rows.clone();
        permuted.rotate_left(rot % rows.len());
        permuted.reverse();
        let a = aggregate(&rows).unwrap();
        prop_assert_eq!(&a, &aggregate(&permuted).unwrap());
        for g in &a {
            prop_assert!(g.ci_low <= g.mean && g.mean <= g.ci_high);
        }
    }
}

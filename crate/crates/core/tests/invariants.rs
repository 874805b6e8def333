use adaffect_core::classify::f1_score;
use adaffect_core::corpus::io::{fmt_sig9, round_sig9};
use adaffect_core::corpus::Level;
use adaffect_core::fusion::{fuse_posteriors, FusionWeights};
use adaffect_core::schedule::max_weight_assignment;
use adaffect_core::stats::{benjamini_hochberg, cohen_kappa, krippendorff_alpha_ordinal};
use proptest::prelude::*;

fn levels(n: usize) -> impl Strategy<Value = Vec<Level>> {
    prop::collection::vec(any::<bool>().prop_map(Level::from_threshold), n)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

proptest! {
    #[test]
    fn alpha_never_exceeds_one(grid in prop::collection::vec(prop::collection::vec(prop::option::of(1i32..=5), 6), 2..6)) {
        if let Ok(a) = krippendorff_alpha_ordinal::<f64>(&grid) {
            prop_assert!(a <= 1.0 + 1e-12, "{a}");
        }
    }

    #[test]
    fn alpha_is_one_for_identical_raters(row in prop::collection::vec(1i32..=9, 2..12), raters in 2usize..5) {
        let grid: Vec<Vec<Option<i32>>> = (0..raters).map(|_| row.iter().map(|&v| Some(v)).collect()).collect();
        let a = krippendorff_alpha_ordinal::<f64>(&grid).unwrap();
        prop_assert!((a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_is_symmetric((a, b) in (2usize..30).prop_flat_map(|n| (levels(n), levels(n)))) {
        match (cohen_kappa::<f64>(&a, &b), cohen_kappa::<f64>(&b, &a)) {
            (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x.is_err(), y.is_err()),
        }
    }

    #[test]
    fn bh_rejects_a_prefix_of_sorted_p(ps in prop::collection::vec(prop::option::of(0.0f64..1.0), 0..20), q in 0.01f64..0.5) {
        let rej = benjamini_hochberg(&ps, q);
        let worst_rejected = ps.iter().zip(&rej).filter(|(_, r)| **r).filter_map(|(p, _)| *p).fold(f64::MIN, f64::max);
        for (p, r) in ps.iter().zip(&rej) {
            match p {
                None => prop_assert!(!r),
                Some(p) if *p < worst_rejected => prop_assert!(*r),
                _ => {}
            }
        }
    }

    #[test]
    fn f1_is_bounded((p, t) in (1usize..40).prop_flat_map(|n| (levels(n), levels(n)))) {
        let f = f1_score::<f64>(&p, &t, Level::High).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        let self_f = f1_score::<f64>(&t, &t, Level::High).unwrap();
        let has_high = t.contains(&Level::High);
        prop_assert_eq!(self_f == 1.0, has_high);
    }

    #[test]
    fn fused_rows_sum_to_one(
        pa in prop::collection::vec(0.0f64..=1.0, 1..30),
        aa in 0.05f64..=1.0, av in 0.0f64..=1.0, fa in 0.0f64..=1.0, fv in 0.0f64..=1.0,
    ) {
        let a: Vec<[f64; 2]> = pa.iter().map(|&p| [1.0 - p, p]).collect();
        let v: Vec<[f64; 2]> = pa.iter().rev().map(|&p| [1.0 - p, p]).collect();
        let w = FusionWeights::new((aa, av), (fa, fv)).unwrap();
        prop_assert!((w.t.0 + w.t.1 - 1.0).abs() < 1e-12);
        let (rows, labels) = fuse_posteriors(&a, &v, &w).unwrap();
        for (r, l) in rows.iter().zip(&labels) {
            prop_assert!((r[0] + r[1] - 1.0).abs() < 1e-12);
            prop_assert_eq!(*l, Level::from_threshold(r[1] > r[0]));
        }
    }

    #[test]
    fn assignment_matches_brute_force(n in 1usize..5, extra in 0usize..3, cells in prop::collection::vec(-50i64..50, 49)) {
        let m = n + extra;
        let w: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|j| cells[i * 7 + j] as f64).collect()).collect();
        let (cols, total) = max_weight_assignment(&w);
        let mut seen = cols.clone();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), n);
        prop_assert_eq!(total, cols.iter().enumerate().map(|(i, &j)| w[i][j]).sum::<f64>());
        let best = permutations(m)
            .iter()
            .map(|p| (0..n).map(|i| w[i][p[i]]).sum::<f64>())
            .fold(f64::MIN, f64::max);
        prop_assert_eq!(total, best);
    }

    #[test]
    fn sig9_text_round_trips(x in prop::num::f64::NORMAL) {
        let r = round_sig9(x);
        prop_assert_eq!(round_sig9(r), r);
        prop_assert_eq!(fmt_sig9(r).parse::<f64>().unwrap(), r);
        prop_assert!(((r - x) / x).abs() <= 5e-9);
    }
}

use fefi::fuzzy::*;
use fefi::harness::{mae, rmse, wilcoxon_signed_rank};
use fefi::importance::normalize_importance;
use fefi::pipeline::majority_vote;
use fefi::rng::derive_seed;
use proptest::prelude::*;

fn unit_vec(max: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..=1.0, 1..max)
}

proptest! {
    #[test]
    fn summary_is_ordered(values in unit_vec(60)) {
        let s = five_number_summary(&values).unwrap();
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!((s.min, s.max), (lo, hi));
    }

    #[test]
    fn degrees_stay_in_unit_interval(values in unit_vec(30), x in -0.5f64..1.5) {
        let p = partition_from_values(&values, PartitionSource::Output).unwrap();
        let d = p.degrees(x);
        for v in [d.low, d.moderate, d.high] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn low_falls_and_high_rises(values in unit_vec(30), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let p = partition_from_values(&values, PartitionSource::Output).unwrap();
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(p.low.degree(x) >= p.low.degree(y));
        prop_assert!(p.high.degree(x) <= p.high.degree(y));
    }

    #[test]
    fn vote_lies_within_sample(mut values in unit_vec(40)) {
        values.sort_by(f64::total_cmp);
        let v = majority_vote(&values);
        prop_assert!(v >= values[0] - 1e-12 && v <= values[values.len() - 1] + 1e-12);
    }

    #[test]
    fn normalized_max_is_one(raw in proptest::collection::vec(-5.0f64..5.0, 1..20)) {
        let n = normalize_importance(&raw).unwrap();
        let max = n.iter().copied().fold(0.0, f64::max);
        if raw.iter().any(|v| *v > 0.0) {
            prop_assert_eq!(max, 1.0);
        } else {
            prop_assert_eq!(max, 0.0);
        }
        for (r, v) in raw.iter().zip(&n) {
            prop_assert_eq!(*r <= 0.0, *v == 0.0);
        }
    }

    #[test]
    fn errors_bounded_by_max_deviation(pairs in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..40)) {
        let (p, t): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let worst = pairs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(mae(&p, &t).unwrap() <= worst + 1e-15);
        prop_assert!(rmse(&p, &t).unwrap() <= worst + 1e-15);
    }

    #[test]
    fn wilcoxon_is_symmetric(pairs in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 5..40)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let p = wilcoxon_signed_rank(&a, &b).unwrap();
        let q = wilcoxon_signed_rank(&b, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - q).abs() < 1e-12);
    }

    #[test]
    fn derived_seeds_separate_labels(seed in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assert_eq!(derive_seed(seed, &[a]), derive_seed(seed, &[a]));
        if a != b {
            prop_assert_ne!(derive_seed(seed, &[a]), derive_seed(seed, &[b]));
        }
    }
}

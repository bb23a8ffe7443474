use infomeasure::composition::{
    compose, decompose_zeros, direct_sum, permute, tensor, Permutation,
};
use infomeasure::measures::{
    q_entropy, q_logarithm, q_relative_entropy, relative_entropy, shannon_entropy,
    AbsolutelyContinuousPair, Distribution, QParameter,
};
use proptest::prelude::*;

fn distribution(max_n: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.01f64..10.0, 1..=max_n)
        .prop_map(|w| Distribution::normalized(w).unwrap())
}

/// Pairs in A_n where `p` may have zeros that `r` does not.
fn pair(max_n: usize) -> impl Strategy<Value = AbsolutelyContinuousPair> {
    prop::collection::vec((0.01f64..10.0, 0.01f64..10.0, any::<bool>()), 1..=max_n).prop_map(|v| {
        let mut p: Vec<f64> = v
            .iter()
            .map(|&(a, _, zero)| if zero { 0.0 } else { a })
            .collect();
        if p.iter().all(|&x| x == 0.0) {
            p[0] = 1.0;
        }
        let r: Vec<f64> = v.iter().map(|&(_, b, _)| b).collect();
        AbsolutelyContinuousPair::new(
            Distribution::normalized(p).unwrap(),
            Distribution::normalized(r).unwrap(),
        )
        .unwrap()
    })
}

fn q_value() -> impl Strategy<Value = QParameter> {
    prop_oneof![Just(1.0), -1.0f64..3.0].prop_map(|q| QParameter::new(q).unwrap())
}

proptest! {
    #[test]
    fn shannon_is_bounded_by_log_n(p in distribution(8)) {
        let h = shannon_entropy(&p);
        prop_assert!(h >= -1e-15);
        prop_assert!(h <= (p.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn relative_entropy_is_nonnegative(pair in pair(8)) {
        prop_assert!(relative_entropy(&pair) >= -1e-12);
    }

    #[test]
    fn q_relative_entropy_is_nonnegative(pair in pair(8), q in 0.0f64..3.0) {
        let v = q_relative_entropy(&pair, QParameter::new(q).unwrap());
        prop_assert!(v >= -1e-9 * (1.0 + v.abs()));
    }

    #[test]
    fn diagonal_pairs_vanish(p in distribution(8), q in q_value()) {
        let pair = AbsolutelyContinuousPair::diagonal(p);
        prop_assert!(q_relative_entropy(&pair, q).abs() <= 1e-12);
    }

    #[test]
    fn q_log_is_increasing_and_vanishes_at_one(x in 0.01f64..100.0, y in 0.01f64..100.0, q in q_value()) {
        prop_assert_eq!(q_logarithm(1.0, q).unwrap(), 0.0);
        let (a, b) = (q_logarithm(x, q).unwrap(), q_logarithm(y, q).unwrap());
        if x < y {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn permutation_invariance(p in distribution(8), seed in any::<u64>()) {
        let n = p.len();
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.rotate_left((seed % n as u64) as usize);
        let sigma = Permutation::new(mapping).unwrap();
        let permuted = permute(&p, &sigma).unwrap();
        prop_assert!((shannon_entropy(&p) - shannon_entropy(&permuted)).abs() <= 1e-12);
    }

    #[test]
    fn tensor_is_additive_for_shannon(w in distribution(5), p in distribution(5)) {
        let t = tensor(&w, &p);
        let expected = shannon_entropy(&w) + shannon_entropy(&p);
        prop_assert!((shannon_entropy(&t) - expected).abs() <= 1e-12);
    }

    #[test]
    fn compose_matches_grouping_rule(w in distribution(4), parts in prop::collection::vec(distribution(4), 4)) {
        let parts = &parts[..w.len()];
        let composed = compose(&w, parts).unwrap();
        let expected = shannon_entropy(&w)
            + w.weights().iter().zip(parts).map(|(wi, part)| wi * shannon_entropy(part)).sum::<f64>();
        prop_assert!((shannon_entropy(&composed) - expected).abs() <= 1e-12);
    }

    #[test]
    fn direct_sum_lengths_add(a in distribution(5), b in distribution(5), w in 0.0f64..=1.0) {
        let d = direct_sum(w, &a, &b).unwrap();
        prop_assert_eq!(d.len(), a.len() + b.len());
    }

    #[test]
    fn zero_block_identity(pair in pair(8)) {
        let dec = decompose_zeros(&pair);
        let lhs = relative_entropy(&pair);
        let rhs = -dec.r_mass.ln() + relative_entropy(&dec.reduced);
        prop_assert!((lhs - rhs).abs() <= 1e-9);
        prop_assert!(dec.reduced.p().has_full_support());
    }

    #[test]
    fn q_entropy_near_one_matches_shannon(p in distribution(8)) {
        let h = shannon_entropy(&p);
        for q in [1.0 - 1e-6, 1.0 + 1e-6] {
            prop_assert!((q_entropy(&p, QParameter::new(q).unwrap()) - h).abs() <= 1e-5);
        }
    }
}

//! Seeded samplers for audit instances.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::composition::Permutation;
use crate::measures::{AbsolutelyContinuousPair, Distribution};

/// Approximately uniform point of Δ_n: independent unit-rate exponentials,
/// normalized.
pub fn sample_distribution<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Distribution {
    assert!(n >= 1, "sample_distribution needs n >= 1");
    let raw: Vec<f64> = (0..n).map(|_| positive_exp(rng)).collect();
    Distribution::normalized(raw).expect("exponential variates are positive")
}

/// A pair in A_n that exercises the absolute-continuity boundary.
///
/// With probability `zero_probability` (and `n ≥ 2`) a random nonempty
/// proper subset of `p`'s entries is zeroed. `r` is positive on the support
/// of `p` and, independently with probability ½, on each remaining index.
pub fn sample_pair<R: Rng + ?Sized>(
    n: usize,
    zero_probability: f64,
    rng: &mut R,
) -> AbsolutelyContinuousPair {
    assert!(n >= 1, "sample_pair needs n >= 1");
    let mut p_raw: Vec<f64> = (0..n).map(|_| positive_exp(rng)).collect();
    if n >= 2 && rng.gen_bool(zero_probability.clamp(0.0, 1.0)) {
        let zeros = rng.gen_range(1..n);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        for &i in &order[..zeros] {
            p_raw[i] = 0.0;
        }
    }
    let r_raw: Vec<f64> = p_raw
        .iter()
        .map(|&pi| {
            let x = positive_exp(rng);
            if pi > 0.0 || rng.gen_bool(0.5) {
                x
            } else {
                0.0
            }
        })
        .collect();
    let p = Distribution::normalized(p_raw).expect("at least one positive entry");
    let r = Distribution::normalized(r_raw).expect("positive on the support of p");
    AbsolutelyContinuousPair::new(p, r).expect("r covers the support of p")
}

pub fn sample_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
    let mut mapping: Vec<usize> = (0..n).collect();
    mapping.shuffle(rng);
    Permutation::new(mapping).expect("shuffle of the identity")
}

fn positive_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.sample(Exp1);
        if x > 0.0 {
            return x;
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-seed for trial `trial` of the stream named `tag`.
pub fn sub_seed(seed: u64, tag: &str, trial: u64) -> u64 {
    let tag_hash = tag.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    });
    splitmix64(splitmix64(seed ^ splitmix64(tag_hash)) ^ trial)
}

/// An independent generator for one trial.
pub fn trial_rng(seed: u64, tag: &str, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(seed, tag, trial))
}

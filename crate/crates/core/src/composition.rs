//! Structural operators on distributions and pairs.
//!
//! Composition `w ∘ (p¹, …, pⁿ)` places the blocks `w_i·pⁱ` side by side.
//! Tensor, direct sum, and the chain-rule instances used by the audit
//! engine are all special cases of it.

use serde::Serialize;
use thiserror::Error;

use crate::measures::{AbsolutelyContinuousPair, Distribution, MeasureError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompositionError {
    #[error("expected {expected} parts, got {actual}")]
    PartCount { expected: usize, actual: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("index {index} appears more than once or is out of range for n = {n}")]
    NotABijection { index: usize, n: usize },
    #[error("mixing weight must lie in [0, 1], got {0}")]
    WeightOutOfRange(f64),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// A bijection on `{0, …, n−1}`; `p` permuted by `σ` has `p_{σ(i)}` at `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self, CompositionError> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &index in &mapping {
            if index >= n || seen[index] {
                return Err(CompositionError::NotABijection { index, n });
            }
            seen[index] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n).collect(),
        }
    }

    /// Swaps positions `i` and `j`.
    pub fn transposition(n: usize, i: usize, j: usize) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.swap(i, j);
        Self { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &s)| i == s)
    }

    fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.mapping.iter().map(|&s| values[s]).collect()
    }
}

pub fn compose(w: &Distribution, parts: &[Distribution]) -> Result<Distribution, CompositionError> {
    if parts.len() != w.len() {
        return Err(CompositionError::PartCount {
            expected: w.len(),
            actual: parts.len(),
        });
    }
    let total = parts.iter().map(Distribution::len).sum();
    let mut out = Vec::with_capacity(total);
    for (&wi, part) in w.weights().iter().zip(parts) {
        out.extend(part.weights().iter().map(|&x| wi * x));
    }
    Ok(Distribution::from_trusted(out))
}

/// `w ⊗ p = w ∘ (p, …, p)`.
pub fn tensor(w: &Distribution, p: &Distribution) -> Distribution {
    let parts = vec![p.clone(); w.len()];
    compose(w, &parts).expect("part count matches by construction")
}

/// `w·p ⊕ (1−w)·r`.
pub fn direct_sum(
    w: f64,
    p: &Distribution,
    r: &Distribution,
) -> Result<Distribution, CompositionError> {
    if !(0.0..=1.0).contains(&w) {
        return Err(CompositionError::WeightOutOfRange(w));
    }
    let rest = 1.0 - w;
    let out = p
        .weights()
        .iter()
        .map(|&x| w * x)
        .chain(r.weights().iter().map(|&x| rest * x))
        .collect();
    Ok(Distribution::from_trusted(out))
}

pub fn permute(p: &Distribution, sigma: &Permutation) -> Result<Distribution, CompositionError> {
    if sigma.len() != p.len() {
        return Err(CompositionError::LengthMismatch {
            left: p.len(),
            right: sigma.len(),
        });
    }
    Ok(Distribution::from_trusted(sigma.apply(p.weights())))
}

pub fn permute_pair(
    pair: &AbsolutelyContinuousPair,
    sigma: &Permutation,
) -> Result<AbsolutelyContinuousPair, CompositionError> {
    let p = permute(pair.p(), sigma)?;
    let r = permute(pair.r(), sigma)?;
    Ok(AbsolutelyContinuousPair::new(p, r)?)
}

/// Composes both coordinates. The result is re-validated against A_n,
/// which certifies closure of A under composition on every call.
pub fn pair_compose(
    wpair: &AbsolutelyContinuousPair,
    parts: &[AbsolutelyContinuousPair],
) -> Result<AbsolutelyContinuousPair, CompositionError> {
    let ps: Vec<Distribution> = parts.iter().map(|x| x.p().clone()).collect();
    let rs: Vec<Distribution> = parts.iter().map(|x| x.r().clone()).collect();
    let p = compose(wpair.p(), &ps)?;
    let r = compose(wpair.r(), &rs)?;
    Ok(AbsolutelyContinuousPair::new(p, r)?)
}

/// `w·p ⊕ (1−w)·r` on both coordinates, with `w = wpair.p()[0]` and
/// `w̃ = wpair.r()[0]`.
pub fn pair_direct_sum(
    wpair: &AbsolutelyContinuousPair,
    first: &AbsolutelyContinuousPair,
    second: &AbsolutelyContinuousPair,
) -> Result<AbsolutelyContinuousPair, CompositionError> {
    if wpair.len() != 2 {
        return Err(CompositionError::LengthMismatch {
            left: wpair.len(),
            right: 2,
        });
    }
    pair_compose(wpair, &[first.clone(), second.clone()])
}

/// Splitting of a pair into the block where `p` lives and the rest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroBlockDecomposition {
    /// Mass of `r` on the support of `p`.
    pub r_mass: f64,
    /// `(p′, r′)`: both restricted to the support of `p`, `r′` rescaled by
    /// `1/r_mass`.
    pub reduced: AbsolutelyContinuousPair,
    /// Stable permutation moving the support of `p` to the front.
    pub permutation: Permutation,
}

impl ZeroBlockDecomposition {
    pub fn support_len(&self) -> usize {
        self.reduced.len()
    }
}

pub fn decompose_zeros(pair: &AbsolutelyContinuousPair) -> ZeroBlockDecomposition {
    let n = pair.len();
    if pair.p().has_full_support() {
        return ZeroBlockDecomposition {
            r_mass: 1.0,
            reduced: pair.clone(),
            permutation: Permutation::identity(n),
        };
    }
    let support: Vec<usize> = pair.p().support().collect();
    let mapping: Vec<usize> = support
        .iter()
        .copied()
        .chain((0..n).filter(|&i| pair.p().weights()[i] == 0.0))
        .collect();

    let p_block: Vec<f64> = support.iter().map(|&i| pair.p().weights()[i]).collect();
    let r_block: Vec<f64> = support.iter().map(|&i| pair.r().weights()[i]).collect();
    let r_mass = crate::sum::compensated_sum(r_block.iter().copied());
    // r_mass > 0: r is positive wherever p is
    let r_reduced = r_block.into_iter().map(|x| x / r_mass).collect();
    let reduced = AbsolutelyContinuousPair::new(
        Distribution::from_trusted(p_block),
        Distribution::from_trusted(r_reduced),
    )
    .expect("support restriction stays in A");
    ZeroBlockDecomposition {
        r_mass,
        reduced,
        permutation: Permutation { mapping },
    }
}

//! Finite distributions and the five information measures on them.
//!
//! | Function | Domain | Value |
//! |----------|--------|-------|
//! | [`q_logarithm`] | x > 0 | ∫₁ˣ t^(−q) dt |
//! | [`shannon_entropy`] | Δ_n | Σ p_i log(1/p_i) |
//! | [`relative_entropy`] | A_n | Σ p_i log(p_i/r_i) |
//! | [`q_entropy`] | Δ_n | Σ p_i ln_q(1/p_i) |
//! | [`q_relative_entropy`] | A_n | −Σ p_i ln_q(r_i/p_i) |
//!
//! All sums run over the support of `p` only. Terms with `p_i = 0` are never
//! evaluated, so `0·log 0` never appears.

use serde::Serialize;
use thiserror::Error;

use crate::sum::{compensated_sum, CompensatedSum};

/// Tolerance on `|Σ p_i − 1|` accepted by [`Distribution::new`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// `|q − 1|` at or below this value selects the logarithmic branch.
pub const UNIT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("distribution is empty")]
    Empty,
    #[error("weight at index {index} is not finite ({value})")]
    NotFinite { index: usize, value: f64 },
    #[error("weight at index {index} is negative ({value})")]
    Negative { index: usize, value: f64 },
    #[error("weights sum to {sum}, not 1 (tolerance {SUM_TOLERANCE:e})")]
    NotNormalized { sum: f64 },
    #[error("cannot normalize weights with zero total mass")]
    ZeroMass,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("not absolutely continuous: p_i>0, r_i=0 at index {index}")]
    NotAbsolutelyContinuous { index: usize },
    #[error("q must be finite, got {0}")]
    InvalidQ(f64),
    #[error("q-logarithm requires x > 0, got {0}")]
    NonPositiveArgument(f64),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

/// A point of the probability simplex Δ_n.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    /// Validates `weights` without rescaling them.
    pub fn new(weights: Vec<f64>) -> Result<Self, MeasureError> {
        check_entries(&weights)?;
        let sum = compensated_sum(weights.iter().copied());
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(MeasureError::NotNormalized { sum });
        }
        Ok(Self { weights })
    }

    /// Rescales nonnegative `weights` to unit mass.
    pub fn normalized(weights: Vec<f64>) -> Result<Self, MeasureError> {
        check_entries(&weights)?;
        let total = compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(MeasureError::ZeroMass);
        }
        Ok(Self {
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// The unique point of Δ_1.
    pub fn point() -> Self {
        Self { weights: vec![1.0] }
    }

    /// Point mass at `index` in Δ_n.
    pub fn point_mass(n: usize, index: usize) -> Self {
        assert!(
            index < n,
            "point mass index {index} out of range for n = {n}"
        );
        let mut weights = vec![0.0; n];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs n >= 1");
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Builds a distribution from weights that are correct by construction
    /// (products and concatenations of validated distributions).
    pub(crate) fn from_trusted(weights: Vec<f64>) -> Self {
        debug_assert!(!weights.is_empty());
        debug_assert!(weights.iter().all(|w| *w >= 0.0));
        Self { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// Indices with positive weight, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, _)| i)
    }

    pub fn has_full_support(&self) -> bool {
        self.weights.iter().all(|w| *w > 0.0)
    }
}

fn check_entries(weights: &[f64]) -> Result<(), MeasureError> {
    if weights.is_empty() {
        return Err(MeasureError::Empty);
    }
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() {
            return Err(MeasureError::NotFinite { index, value });
        }
        if value < 0.0 {
            return Err(MeasureError::Negative { index, value });
        }
    }
    Ok(())
}

/// A pair `(p, r)` in A_n: same length and `p_i = 0` wherever `r_i = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsolutelyContinuousPair {
    p: Distribution,
    r: Distribution,
}

impl AbsolutelyContinuousPair {
    pub fn new(p: Distribution, r: Distribution) -> Result<Self, MeasureError> {
        if p.len() != r.len() {
            return Err(MeasureError::LengthMismatch {
                left: p.len(),
                right: r.len(),
            });
        }
        if let Some(index) = first_violation(&p, &r) {
            return Err(MeasureError::NotAbsolutelyContinuous { index });
        }
        Ok(Self { p, r })
    }

    /// `(p, p)`, always in A_n.
    pub fn diagonal(p: Distribution) -> Self {
        Self { r: p.clone(), p }
    }

    /// `((1), (1))`.
    pub fn trivial() -> Self {
        Self::diagonal(Distribution::point())
    }

    pub fn p(&self) -> &Distribution {
        &self.p
    }

    pub fn r(&self) -> &Distribution {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn into_parts(self) -> (Distribution, Distribution) {
        (self.p, self.r)
    }
}

fn first_violation(p: &Distribution, r: &Distribution) -> Option<usize> {
    p.weights()
        .iter()
        .zip(r.weights())
        .position(|(&pi, &ri)| pi > 0.0 && ri == 0.0)
}

/// The deformation parameter of the q-logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct QParameter(f64);

impl QParameter {
    pub const ONE: QParameter = QParameter(1.0);

    pub fn new(q: f64) -> Result<Self, MeasureError> {
        if q.is_finite() {
            Ok(Self(q))
        } else {
            Err(MeasureError::InvalidQ(q))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// True when the logarithmic branch applies.
    pub fn is_unit(self) -> bool {
        (self.0 - 1.0).abs() <= UNIT_THRESHOLD
    }

    /// `x^q` for `x > 0`, zero for `x = 0`: the block weight of the q-chain
    /// rule for entropies.
    pub fn power_weight(self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else if self.is_unit() {
            x
        } else {
            x.powf(self.0)
        }
    }

    /// `x^q · y^(1−q)`, the weight a block of masses `(x, y)` carries in a
    /// q-chain rule. Zero when `x = 0`; reduces to `x` on the unit branch.
    pub fn chain_weight(self, x: f64, y: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else if self.is_unit() {
            x
        } else {
            x.powf(self.0) * y.powf(1.0 - self.0)
        }
    }
}

impl TryFrom<f64> for QParameter {
    type Error = MeasureError;

    fn try_from(q: f64) -> Result<Self, Self::Error> {
        Self::new(q)
    }
}

/// ln_q(x) = ∫₁ˣ t^(−q) dt.
pub fn q_logarithm(x: f64, q: QParameter) -> Result<f64, MeasureError> {
    if x.is_nan() || x <= 0.0 {
        return Err(MeasureError::NonPositiveArgument(x));
    }
    Ok(q_log_unchecked(x, q))
}

// Below this |(1−q)·ln x| the expm1 form is used; above it x^(1−q) is far
// enough from 1 that powf loses nothing to cancellation, while exp would
// amplify the rounding of ln x by the size of the exponent.
const EXPM1_CUTOFF: f64 = 0.5;

#[inline]
fn q_log_unchecked(x: f64, q: QParameter) -> f64 {
    let ln_x = x.ln();
    if q.is_unit() {
        return ln_x;
    }
    let a = 1.0 - q.value();
    if (a * ln_x).abs() < EXPM1_CUTOFF {
        (a * ln_x).exp_m1() / a
    } else {
        (x.powf(a) - 1.0) / a
    }
}

/// `p·ln_q(1/p) = (p^q − p)/(1−q)` for `p > 0`.
#[inline]
fn q_entropy_term(p: f64, q: QParameter) -> f64 {
    let a = 1.0 - q.value();
    let ln_p = p.ln();
    if (a * ln_p).abs() < EXPM1_CUTOFF {
        p * (-a * ln_p).exp_m1() / a
    } else {
        (p.powf(q.value()) - p) / a
    }
}

pub fn shannon_entropy(p: &Distribution) -> f64 {
    let mut acc = CompensatedSum::new();
    for i in p.support() {
        let pi = p.weights()[i];
        acc.add(-pi * pi.ln());
    }
    acc.value()
}

pub fn relative_entropy(pair: &AbsolutelyContinuousPair) -> f64 {
    let (p, r) = (pair.p().weights(), pair.r().weights());
    let mut acc = CompensatedSum::new();
    for i in pair.p().support() {
        acc.add(p[i] * (p[i] / r[i]).ln());
    }
    acc.value()
}

/// Relative entropy on arbitrary pairs of equal length; `+∞` outside A_n.
pub fn relative_entropy_extended(p: &Distribution, r: &Distribution) -> Result<f64, MeasureError> {
    match AbsolutelyContinuousPair::new(p.clone(), r.clone()) {
        Ok(pair) => Ok(relative_entropy(&pair)),
        Err(MeasureError::NotAbsolutelyContinuous { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// S_q(p) = Σ p_i ln_q(1/p_i); Shannon entropy on the unit branch.
pub fn q_entropy(p: &Distribution, q: QParameter) -> f64 {
    if q.is_unit() {
        return shannon_entropy(p);
    }
    let w = p.weights();
    let mut acc = CompensatedSum::new();
    for i in p.support() {
        acc.add(q_entropy_term(w[i], q));
    }
    acc.value()
}

/// D_q(p‖r) = −Σ p_i ln_q(r_i/p_i); relative entropy on the unit branch.
pub fn q_relative_entropy(pair: &AbsolutelyContinuousPair, q: QParameter) -> f64 {
    if q.is_unit() {
        return relative_entropy(pair);
    }
    let (p, r) = (pair.p().weights(), pair.r().weights());
    let mut acc = CompensatedSum::new();
    for i in pair.p().support() {
        acc.add(-p[i] * q_log_unchecked(r[i] / p[i], q));
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(w: &[f64]) -> Distribution {
        Distribution::new(w.to_vec()).unwrap()
    }

    fn pair(p: &[f64], r: &[f64]) -> AbsolutelyContinuousPair {
        AbsolutelyContinuousPair::new(dist(p), dist(r)).unwrap()
    }

    fn q(v: f64) -> QParameter {
        QParameter::new(v).unwrap()
    }

    #[test]
    fn distribution_validation() {
        assert_eq!(Distribution::new(vec![]), Err(MeasureError::Empty));
        assert!(matches!(
            Distribution::new(vec![1.2, -0.2]),
            Err(MeasureError::Negative { index: 1, .. })
        ));
        assert!(matches!(
            Distribution::new(vec![0.5, f64::NAN]),
            Err(MeasureError::NotFinite { index: 1, .. })
        ));
        assert!(matches!(
            Distribution::new(vec![0.5, 0.6]),
            Err(MeasureError::NotNormalized { .. })
        ));
        assert!(Distribution::new(vec![0.5, 0.5 + 5e-10]).is_ok());
        // no silent rescaling
        assert_eq!(dist(&[0.5, 0.5 + 5e-10]).weights()[1], 0.5 + 5e-10);
        assert_eq!(
            Distribution::normalized(vec![1.0, 3.0]).unwrap().weights(),
            &[0.25, 0.75]
        );
        assert_eq!(
            Distribution::normalized(vec![0.0, 0.0]),
            Err(MeasureError::ZeroMass)
        );
    }

    #[test]
    fn pair_validation() {
        assert!(matches!(
            AbsolutelyContinuousPair::new(dist(&[1.0]), dist(&[0.5, 0.5])),
            Err(MeasureError::LengthMismatch { left: 1, right: 2 })
        ));
        assert_eq!(
            AbsolutelyContinuousPair::new(dist(&[0.5, 0.5]), dist(&[1.0, 0.0])),
            Err(MeasureError::NotAbsolutelyContinuous { index: 1 })
        );
        // r may vanish where p does
        assert!(AbsolutelyContinuousPair::new(dist(&[1.0, 0.0]), dist(&[1.0, 0.0])).is_ok());
    }

    #[test]
    fn q_parameter_branch() {
        assert!(q(1.0).is_unit());
        assert!(q(1.0 + 5e-13).is_unit());
        assert!(!q(1.0 + 1e-11).is_unit());
        assert!(QParameter::new(f64::INFINITY).is_err());
    }

    #[test]
    fn q_logarithm_examples() {
        for qv in [-1.0, 0.0, 0.5, 1.0, 2.0, 3.0] {
            assert_eq!(q_logarithm(1.0, q(qv)).unwrap(), 0.0);
        }
        assert!((q_logarithm(2.0, q(2.0)).unwrap() - 0.5).abs() < 1e-15);
        assert!((q_logarithm(3.0, q(0.0)).unwrap() - 2.0).abs() < 1e-15);
        assert!((q_logarithm(std::f64::consts::E, q(1.0)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(
            q_logarithm(0.0, q(2.0)),
            Err(MeasureError::NonPositiveArgument(0.0))
        );
        assert!(q_logarithm(-1.0, q(1.0)).is_err());
        assert!(q_logarithm(f64::NAN, q(1.0)).is_err());
    }

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon_entropy(&dist(&[1.0, 0.0])), 0.0);
        assert!((shannon_entropy(&dist(&[0.5, 0.5])) - 2f64.ln()).abs() < 1e-15);
        // 0.25 ln 4 + 0.75 ln(4/3)
        assert!((shannon_entropy(&dist(&[0.25, 0.75])) - 0.562_335_144_618_808_4).abs() < 1e-13);
    }

    #[test]
    fn relative_entropy_examples() {
        assert_eq!(relative_entropy(&pair(&[0.3, 0.7], &[0.3, 0.7])), 0.0);
        assert!((relative_entropy(&pair(&[1.0, 0.0], &[0.5, 0.5])) - 2f64.ln()).abs() < 1e-15);
        // 0.5 ln 2 + 0.5 ln(2/3)
        assert!(
            (relative_entropy(&pair(&[0.5, 0.5], &[0.25, 0.75])) - 0.143_841_036_225_890_46).abs()
                < 1e-14
        );
    }

    #[test]
    fn extended_relative_entropy() {
        let e = relative_entropy_extended(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap();
        assert_eq!(e, f64::INFINITY);
        let e = relative_entropy_extended(&dist(&[1.0, 0.0]), &dist(&[0.5, 0.5])).unwrap();
        assert!((e - 2f64.ln()).abs() < 1e-15);
        let e = relative_entropy_extended(&dist(&[0.0, 1.0]), &dist(&[0.0, 1.0])).unwrap();
        assert_eq!(e, 0.0);
        assert!(relative_entropy_extended(&dist(&[1.0]), &dist(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn q_entropy_examples() {
        for qv in [-1.0, 0.0, 0.5, 1.0, 2.0, 3.0] {
            assert_eq!(q_entropy(&Distribution::point(), q(qv)), 0.0);
        }
        assert!((q_entropy(&dist(&[0.5, 0.5]), q(2.0)) - 0.5).abs() < 1e-15);
        assert!((q_entropy(&dist(&[0.3, 0.7]), q(0.0)) - 1.0).abs() < 1e-15);
        assert_eq!(
            q_entropy(&dist(&[0.2, 0.8]), q(1.0)),
            shannon_entropy(&dist(&[0.2, 0.8]))
        );
    }

    #[test]
    fn q_relative_entropy_examples() {
        let p = [0.2, 0.3, 0.5];
        for qv in [-1.0, 0.0, 0.5, 2.0, 3.0] {
            assert_eq!(q_relative_entropy(&pair(&p, &p), q(qv)), 0.0);
        }
        assert!(
            (q_relative_entropy(&pair(&[0.5, 0.5], &[0.25, 0.75]), q(2.0)) - 1.0 / 3.0).abs()
                < 1e-15
        );
        assert!((q_relative_entropy(&pair(&[1.0, 0.0], &[0.5, 0.5]), q(2.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn q_forms_match_closed_expressions() {
        let p = dist(&[0.1, 0.2, 0.3, 0.4]);
        let r = dist(&[0.4, 0.3, 0.2, 0.1]);
        let pr = AbsolutelyContinuousPair::new(p.clone(), r.clone()).unwrap();
        for qv in [-1.0, 0.0, 0.5, 2.0, 3.0] {
            let closed_s = (p.weights().iter().map(|x| x.powf(qv)).sum::<f64>() - 1.0) / (1.0 - qv);
            assert!((q_entropy(&p, q(qv)) - closed_s).abs() < 1e-13);
            let closed_d = (p
                .weights()
                .iter()
                .zip(r.weights())
                .map(|(a, b)| a.powf(qv) * b.powf(1.0 - qv))
                .sum::<f64>()
                - 1.0)
                / (qv - 1.0);
            assert!((q_relative_entropy(&pr, q(qv)) - closed_d).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_weights_are_skipped() {
        let a = dist(&[0.25, 0.75]);
        let b = dist(&[0.25, 0.75, 0.0]);
        assert_eq!(shannon_entropy(&a).to_bits(), shannon_entropy(&b).to_bits());
        for qv in [-1.0, 0.0, 0.5, 2.0] {
            assert_eq!(
                q_entropy(&a, q(qv)).to_bits(),
                q_entropy(&b, q(qv)).to_bits()
            );
        }
    }

    #[test]
    fn chain_weight_branches() {
        assert_eq!(q(2.0).chain_weight(0.0, 0.5), 0.0);
        assert_eq!(q(-1.0).chain_weight(0.0, 0.5), 0.0);
        assert_eq!(QParameter::ONE.chain_weight(0.3, 0.9), 0.3);
        assert!((q(2.0).chain_weight(0.5, 0.25) - 1.0).abs() < 1e-15);
    }
}

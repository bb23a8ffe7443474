//! Numerical versions of the uniqueness arguments for `D`, `S_q` and `D_q`.
//!
//! For a divergence-type candidate `I`, the function
//! `L(α) = I((1,0) ‖ (α, 1−α))` turns the chain rule into
//! `L(αβ) = L(α) + L(β)`; a measure proportional to `D` has
//! `L(α) = −c·log α`. [`fit_log_constant`] estimates `c` by least squares
//! and reports how far `L` is from log-linear. For `q ≠ 1` the constant is
//! read off a single evaluation ([`extract_constant_q`],
//! [`extract_constant_q_rel`]). [`verify_scaling`] then compares the
//! candidate with `c` times the reference measure on seeded instances.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::audit::{sample_pair, trial_rng, SamplingConfig};
use crate::handle::{HandleError, MeasureHandle, MeasureKind, Subject};
use crate::measures::{AbsolutelyContinuousPair, Distribution, MeasureError, QParameter};

pub const SIGN_NOTE: &str = "constant computed as (q-1)/(2^(q-1)-1) * I((1,0)||(1/2,1/2)); \
     the prefactor (1-q) would return -1 for I = D_q, so the sign is fixed by D_q itself";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CharacterizationError {
    #[error("alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("log-fit grid has no point with alpha < 1")]
    EmptyGrid,
    #[error("q = {0} lies on the logarithmic branch; constant extraction needs q != 1")]
    UnitQ(f64),
    #[error("p must have full support; p_{index} = 0")]
    NotFullSupport { index: usize },
    #[error("measures must have the same kind: {candidate} vs {reference}")]
    KindMismatch {
        candidate: MeasureKind,
        reference: MeasureKind,
    },
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Handle(#[from] HandleError),
}

impl From<MeasureError> for CharacterizationError {
    fn from(e: MeasureError) -> Self {
        CharacterizationError::Handle(HandleError::Measure(e))
    }
}

fn check_alpha(alpha: f64) -> Result<(), CharacterizationError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(CharacterizationError::AlphaOutOfRange(alpha))
    }
}

fn reject_unit(q: QParameter) -> Result<(), CharacterizationError> {
    if q.is_unit() {
        Err(CharacterizationError::UnitQ(q.value()))
    } else {
        Ok(())
    }
}

/// `L(α) = m((1,0) ‖ (α, 1−α))`.
pub fn ell(m: &MeasureHandle, alpha: f64) -> Result<f64, CharacterizationError> {
    check_alpha(alpha)?;
    let pair = AbsolutelyContinuousPair::new(
        Distribution::point_mass(2, 0),
        Distribution::new(vec![alpha, 1.0 - alpha])?,
    )?;
    Ok(m.eval_divergence(&pair)?)
}

/// `|L(αβ) − L(α) − L(β)|`.
pub fn check_multiplicativity(
    m: &MeasureHandle,
    alpha: f64,
    beta: f64,
) -> Result<f64, CharacterizationError> {
    check_alpha(alpha)?;
    check_alpha(beta)?;
    Ok((ell(m, alpha * beta)? - ell(m, alpha)? - ell(m, beta)?).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogFitResult {
    pub c: f64,
    /// `max |L(α) + c·log α|` over the whole grid, `α = 1` included.
    pub max_residual: f64,
    pub grid: Vec<f64>,
}

/// `{k/32 : 1 ≤ k ≤ 32}`.
pub fn default_log_grid() -> Vec<f64> {
    (1..=32).map(|k| f64::from(k) / 32.0).collect()
}

/// Least-squares `c` in `L(α) ≈ −c·log α`.
pub fn fit_log_constant(
    m: &MeasureHandle,
    grid: &[f64],
) -> Result<LogFitResult, CharacterizationError> {
    let values = grid
        .iter()
        .map(|&a| Ok((a, ell(m, a)?)))
        .collect::<Result<Vec<_>, CharacterizationError>>()?;

    let (mut num, mut den) = (0.0, 0.0);
    for &(a, l) in &values {
        let x = -a.ln();
        if x != 0.0 {
            num += l * x;
            den += x * x;
        }
    }
    if den == 0.0 {
        return Err(CharacterizationError::EmptyGrid);
    }
    let c = num / den;
    let max_residual = values
        .iter()
        .map(|&(a, l)| (l + c * a.ln()).abs())
        .fold(0.0, f64::max);
    Ok(LogFitResult {
        c,
        max_residual,
        grid: grid.to_vec(),
    })
}

/// `(1−q)/(2^(1−q) − 1) · m(½, ½)`; equals 1 on `S_q`.
pub fn extract_constant_q(m: &MeasureHandle, q: QParameter) -> Result<f64, CharacterizationError> {
    reject_unit(q)?;
    let a = 1.0 - q.value();
    let value = m.eval_entropy(&Distribution::uniform(2))?;
    Ok(a / (a * std::f64::consts::LN_2).exp_m1() * value)
}

/// `(q−1)/(2^(q−1) − 1) · m((1,0) ‖ (½,½))`; equals 1 on `D_q`.
pub fn extract_constant_q_rel(
    m: &MeasureHandle,
    q: QParameter,
) -> Result<f64, CharacterizationError> {
    reject_unit(q)?;
    let a = q.value() - 1.0;
    let pair =
        AbsolutelyContinuousPair::new(Distribution::point_mass(2, 0), Distribution::uniform(2))?;
    let value = m.eval_divergence(&pair)?;
    Ok(a / (a * std::f64::consts::LN_2).exp_m1() * value)
}

/// The 2n-element pair `(p ⊕ 0 ‖ αp ⊕ (r − αp))` built from a full-support
/// pair, with the largest admissible `α`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BFInstance {
    pub alpha: f64,
    pub big_pair: AbsolutelyContinuousPair,
}

pub fn build_bf_instance(
    pair: &AbsolutelyContinuousPair,
) -> Result<BFInstance, CharacterizationError> {
    let (p, r) = (pair.p().weights(), pair.r().weights());
    if let Some(index) = p.iter().position(|&x| x == 0.0) {
        return Err(CharacterizationError::NotFullSupport { index });
    }
    let alpha = p
        .iter()
        .zip(r)
        .map(|(&pi, &ri)| ri / pi)
        .fold(1.0_f64, f64::min);

    let n = p.len();
    let mut big_p = Vec::with_capacity(2 * n);
    big_p.extend_from_slice(p);
    big_p.extend(std::iter::repeat_n(0.0, n));
    let mut big_r: Vec<f64> = p.iter().map(|&pi| alpha * pi).collect();
    // r_i − αp_i can round a hair below zero at the minimizing index
    big_r.extend(p.iter().zip(r).map(|(&pi, &ri)| (ri - alpha * pi).max(0.0)));

    let big_pair =
        AbsolutelyContinuousPair::new(Distribution::new(big_p)?, Distribution::new(big_r)?)?;
    Ok(BFInstance { alpha, big_pair })
}

/// `max |m(x) − c·reference(x)|` over `trials` seeded instances, with zero
/// blocks allowed.
pub fn verify_scaling(
    m: &MeasureHandle,
    c: f64,
    reference: &MeasureHandle,
    trials: usize,
    seed: u64,
) -> Result<f64, CharacterizationError> {
    verify_scaling_with(m, c, reference, trials, seed, &SamplingConfig::default())
}

pub fn verify_scaling_with(
    m: &MeasureHandle,
    c: f64,
    reference: &MeasureHandle,
    trials: usize,
    seed: u64,
    sampling: &SamplingConfig,
) -> Result<f64, CharacterizationError> {
    if m.kind() != reference.kind() {
        return Err(CharacterizationError::KindMismatch {
            candidate: m.kind(),
            reference: reference.kind(),
        });
    }
    if trials == 0 {
        return Err(CharacterizationError::NoTrials);
    }
    let kind = m.kind();
    let deviations = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, "scaling", i as u64);
            let n = rand::Rng::gen_range(&mut rng, 1..=sampling.max_n);
            let pair = sample_pair(n, sampling.zero_probability, &mut rng);
            let subject = match kind {
                MeasureKind::Entropy => Subject::Distribution(pair.into_parts().0),
                MeasureKind::Divergence => Subject::Pair(pair),
            };
            let d = (m.evaluate(&subject)? - c * reference.evaluate(&subject)?).abs();
            Ok(if d.is_nan() { f64::INFINITY } else { d })
        })
        .collect::<Result<Vec<f64>, CharacterizationError>>()?;
    Ok(deviations.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    /// Log-fit of `L`, reference `D`.
    #[serde(rename = "fit_log")]
    FitLog,
    /// `S_q` constant, reference `S_q`.
    #[serde(rename = "thm2")]
    QEntropy,
    /// `D_q` constant, reference `D_q`.
    #[serde(rename = "thm3")]
    QRelativeEntropy,
}

impl Method {
    pub fn kind(self) -> MeasureKind {
        match self {
            Method::FitLog | Method::QRelativeEntropy => MeasureKind::Divergence,
            Method::QEntropy => MeasureKind::Entropy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacterizationResult {
    pub c: f64,
    pub max_residual: f64,
    pub method: Method,
    pub sign_note: Option<String>,
}

impl CharacterizationResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("result is always serializable")
    }
}

/// Extracts the constant with `method` and measures how well `c·reference`
/// reproduces `m`. For the log-fit the residual also covers non-log-linear
/// behaviour of `L`.
pub fn characterize(
    m: &MeasureHandle,
    method: Method,
    q: Option<QParameter>,
    trials: usize,
    seed: u64,
) -> Result<CharacterizationResult, CharacterizationError> {
    m.expect_kind(method.kind())?;
    let result = match method {
        Method::FitLog => {
            let fit = fit_log_constant(m, &default_log_grid())?;
            let dev = verify_scaling(m, fit.c, &MeasureHandle::relative_entropy(), trials, seed)?;
            CharacterizationResult {
                c: fit.c,
                max_residual: fit.max_residual.max(dev),
                method,
                sign_note: None,
            }
        }
        Method::QEntropy => {
            let q = q.unwrap_or(QParameter::ONE);
            let c = extract_constant_q(m, q)?;
            let dev = verify_scaling(m, c, &MeasureHandle::q_entropy(q), trials, seed)?;
            CharacterizationResult {
                c,
                max_residual: dev,
                method,
                sign_note: None,
            }
        }
        Method::QRelativeEntropy => {
            let q = q.unwrap_or(QParameter::ONE);
            let c = extract_constant_q_rel(m, q)?;
            let dev = verify_scaling(m, c, &MeasureHandle::q_relative_entropy(q), trials, seed)?;
            CharacterizationResult {
                c,
                max_residual: dev,
                method,
                sign_note: Some(SIGN_NOTE.to_string()),
            }
        }
    };
    Ok(result)
}

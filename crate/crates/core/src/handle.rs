//! Type-erased measure families.
//!
//! A [`MeasureHandle`] is either entropy-type (evaluated on [`Distribution`]s
//! of every length) or divergence-type (evaluated on
//! [`AbsolutelyContinuousPair`]s). Built-ins, scaled built-ins, DSL
//! expressions, and arbitrary closures all go through the same handle, so the
//! audit and characterization engines never care where a candidate came from.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{
    q_entropy, q_relative_entropy, relative_entropy, shannon_entropy, AbsolutelyContinuousPair,
    Distribution, MeasureError, QParameter,
};
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    /// Δ_n → ℝ
    Entropy,
    /// A_n → ℝ
    Divergence,
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureKind::Entropy => f.write_str("entropy"),
            MeasureKind::Divergence => f.write_str("divergence"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HandleError {
    #[error("measure '{label}' is {actual}-type, expected {expected}-type")]
    KindMismatch {
        label: String,
        expected: MeasureKind,
        actual: MeasureKind,
    },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

type EntropyFn = dyn Fn(&Distribution) -> Result<f64, MeasureError> + Send + Sync;
type DivergenceFn = dyn Fn(&AbsolutelyContinuousPair) -> Result<f64, MeasureError> + Send + Sync;

#[derive(Clone)]
enum Evaluator {
    Entropy(Arc<EntropyFn>),
    Divergence(Arc<DivergenceFn>),
}

/// The argument of a single measure evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Subject {
    Distribution(Distribution),
    Pair(AbsolutelyContinuousPair),
}

impl Subject {
    pub fn kind(&self) -> MeasureKind {
        match self {
            Subject::Distribution(_) => MeasureKind::Entropy,
            Subject::Pair(_) => MeasureKind::Divergence,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Subject::Distribution(p) => p.len(),
            Subject::Pair(pair) => pair.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl From<Distribution> for Subject {
    fn from(p: Distribution) -> Self {
        Subject::Distribution(p)
    }
}

impl From<AbsolutelyContinuousPair> for Subject {
    fn from(pair: AbsolutelyContinuousPair) -> Self {
        Subject::Pair(pair)
    }
}

#[derive(Clone)]
pub struct MeasureHandle {
    label: String,
    evaluator: Evaluator,
}

impl fmt::Debug for MeasureHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasureHandle")
            .field("label", &self.label)
            .field("kind", &self.kind())
            .finish()
    }
}

impl MeasureHandle {
    pub fn entropy<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Distribution) -> Result<f64, MeasureError> + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            evaluator: Evaluator::Entropy(Arc::new(f)),
        }
    }

    pub fn divergence<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&AbsolutelyContinuousPair) -> Result<f64, MeasureError> + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            evaluator: Evaluator::Divergence(Arc::new(f)),
        }
    }

    /// H
    pub fn shannon() -> Self {
        Self::entropy("shannon", |p| Ok(shannon_entropy(p)))
    }

    /// D
    pub fn relative_entropy() -> Self {
        Self::divergence("kl", |pair| Ok(relative_entropy(pair)))
    }

    /// S_q
    pub fn q_entropy(q: QParameter) -> Self {
        Self::entropy(format!("q-entropy(q={})", q.value()), move |p| {
            Ok(q_entropy(p, q))
        })
    }

    /// D_q
    pub fn q_relative_entropy(q: QParameter) -> Self {
        Self::divergence(format!("q-kl(q={})", q.value()), move |pair| {
            Ok(q_relative_entropy(pair, q))
        })
    }

    /// The identically zero measure of the given kind.
    pub fn zero(kind: MeasureKind) -> Self {
        match kind {
            MeasureKind::Entropy => Self::entropy("zero", |_| Ok(0.0)),
            MeasureKind::Divergence => Self::divergence("zero", |_| Ok(0.0)),
        }
    }

    /// Σ i·p_i with 1-based i. Satisfies the chain-type identities on
    /// nothing in particular and breaks symmetry on purpose.
    pub fn index_weighted() -> Self {
        Self::entropy("index-weighted", |p| {
            let mut acc = CompensatedSum::new();
            for (i, &w) in p.weights().iter().enumerate() {
                acc.add((i + 1) as f64 * w);
            }
            Ok(acc.value())
        })
    }

    /// `factor · self`.
    pub fn scaled(&self, factor: f64) -> Self {
        let label = format!("{factor}*{}", self.label);
        match &self.evaluator {
            Evaluator::Entropy(f) => {
                let f = Arc::clone(f);
                Self::entropy(label, move |p| Ok(factor * f(p)?))
            }
            Evaluator::Divergence(f) => {
                let f = Arc::clone(f);
                Self::divergence(label, move |pair| Ok(factor * f(pair)?))
            }
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> MeasureKind {
        match self.evaluator {
            Evaluator::Entropy(_) => MeasureKind::Entropy,
            Evaluator::Divergence(_) => MeasureKind::Divergence,
        }
    }

    pub fn expect_kind(&self, expected: MeasureKind) -> Result<(), HandleError> {
        let actual = self.kind();
        if actual == expected {
            Ok(())
        } else {
            Err(HandleError::KindMismatch {
                label: self.label.clone(),
                expected,
                actual,
            })
        }
    }

    pub fn eval_entropy(&self, p: &Distribution) -> Result<f64, HandleError> {
        match &self.evaluator {
            Evaluator::Entropy(f) => Ok(f(p)?),
            Evaluator::Divergence(_) => Err(self.mismatch(MeasureKind::Entropy)),
        }
    }

    pub fn eval_divergence(&self, pair: &AbsolutelyContinuousPair) -> Result<f64, HandleError> {
        match &self.evaluator {
            Evaluator::Divergence(f) => Ok(f(pair)?),
            Evaluator::Entropy(_) => Err(self.mismatch(MeasureKind::Divergence)),
        }
    }

    pub fn evaluate(&self, subject: &Subject) -> Result<f64, HandleError> {
        match subject {
            Subject::Distribution(p) => self.eval_entropy(p),
            Subject::Pair(pair) => self.eval_divergence(pair),
        }
    }

    fn mismatch(&self, expected: MeasureKind) -> HandleError {
        HandleError::KindMismatch {
            label: self.label.clone(),
            expected,
            actual: self.kind(),
        }
    }
}

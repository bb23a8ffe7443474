//! Candidate measures written as per-index summands.
//!
//! An expression over `p`, `r` and `q` is summed over the support of `p`
//! with `(p, r)` bound to `(p_i, r_i)`, optionally followed by an affine map
//! `a·Σ + b`:
//!
//! ```
//! use infomeasure::dsl;
//! use infomeasure::{Distribution, MeasureKind};
//!
//! let expr = dsl::parse("p*log(1/p)").unwrap();
//! let h = dsl::as_measure(&expr, MeasureKind::Entropy, None).unwrap();
//! let p = Distribution::new(vec![0.5, 0.5]).unwrap();
//! assert!((h.eval_entropy(&p).unwrap() - 2f64.ln()).abs() < 1e-15);
//! ```
//!
//! Entropy-type expressions may not mention `r`. `q` and `lnq` need a q
//! value. Indices with `p_i = 0` are invisible to the expression.

mod ast;
mod eval;
mod parser;

use std::sync::Arc;

use thiserror::Error;

pub use ast::{BinOp, Expr, ExprKind, Func, SourceSpan, Var};
pub use parser::MAX_DEPTH;

use crate::handle::{MeasureHandle, MeasureKind};
use crate::measures::{Distribution, MeasureError, QParameter};
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at offset {}", span.start)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    /// Token classes that would have been accepted here.
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error: {0}")]
    Parse(#[from] ParseError),
    #[error("invalid expression: {message} at offset {}", span.start)]
    Validation { span: SourceSpan, message: String },
    #[error("evaluation failed at index {index}: {message}")]
    Eval { index: usize, message: String },
    #[error("expression references r but no r distribution was supplied")]
    MissingR,
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

impl DslError {
    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            DslError::Parse(e) => Some(e.span),
            DslError::Validation { span, .. } => Some(*span),
            _ => None,
        }
    }

    /// The error message, followed by the source and a caret line when the
    /// error has a location.
    pub fn render(&self, source: &str) -> String {
        let mut out = self.to_string();
        if let DslError::Parse(e) = self {
            if !e.expected.is_empty() {
                out.push_str(&format!("\nexpected one of: {}", e.expected.join(", ")));
            }
        }
        if let Some(span) = self.span() {
            let col = source
                .get(..span.start)
                .map_or(span.start, |s| s.chars().count());
            let width = source
                .get(span.start..span.end)
                .map_or(1, |s| s.chars().count())
                .max(1);
            out.push_str(&format!(
                "\n  {source}\n  {}{}",
                " ".repeat(col),
                "^".repeat(width)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub scale: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureExpression {
    pub source: String,
    pub body: Expr,
    pub affine: Option<Affine>,
}

impl MeasureExpression {
    pub fn uses_r(&self) -> bool {
        self.body.find_var(Var::R).is_some()
    }

    pub fn uses_q(&self) -> bool {
        self.body.find_q_use().is_some()
    }

    /// Checks that the expression fits `kind` and the availability of `q`.
    pub fn validate(&self, kind: MeasureKind, q: Option<QParameter>) -> Result<(), DslError> {
        if kind == MeasureKind::Entropy {
            if let Some(span) = self.body.find_var(Var::R) {
                return Err(DslError::Validation {
                    span,
                    message: "entropy-type expressions cannot reference r".into(),
                });
            }
        }
        if q.is_none() {
            if let Some(span) = self.body.find_q_use() {
                return Err(DslError::Validation {
                    span,
                    message: "expression needs q but none was supplied".into(),
                });
            }
        }
        Ok(())
    }
}

pub fn parse(source: &str) -> Result<MeasureExpression, ParseError> {
    parser::parse(source)
}

/// Σ over the support of `p` of the summand, then the affine wrapper.
pub fn evaluate(
    expr: &MeasureExpression,
    p: &Distribution,
    r: Option<&Distribution>,
    q: Option<QParameter>,
) -> Result<f64, DslError> {
    if let Some(r) = r {
        if r.len() != p.len() {
            return Err(MeasureError::LengthMismatch {
                left: p.len(),
                right: r.len(),
            }
            .into());
        }
    } else if expr.uses_r() {
        return Err(DslError::MissingR);
    }
    let mut acc = CompensatedSum::new();
    for index in p.support() {
        let pi = p.weights()[index];
        let ri = r.map_or(f64::NAN, |r| r.weights()[index]);
        let term = eval::eval_node(&expr.body, pi, ri, q)
            .map_err(|message| DslError::Eval { index, message })?;
        if !term.is_finite() {
            return Err(DslError::Eval {
                index,
                message: format!("summand is not finite ({term})"),
            });
        }
        acc.add(term);
    }
    let sum = acc.value();
    Ok(match expr.affine {
        Some(Affine { scale, offset }) => scale * sum + offset,
        None => sum,
    })
}

/// Wraps `expr` as a measure of the given kind, labelled by its source.
pub fn as_measure(
    expr: &MeasureExpression,
    kind: MeasureKind,
    q: Option<QParameter>,
) -> Result<MeasureHandle, DslError> {
    expr.validate(kind, q)?;
    let shared = Arc::new(expr.clone());
    let label = expr.source.clone();
    let to_measure_error = |e: DslError| MeasureError::Evaluation(e.to_string());
    Ok(match kind {
        MeasureKind::Entropy => MeasureHandle::entropy(label, move |p| {
            evaluate(&shared, p, None, q).map_err(to_measure_error)
        }),
        MeasureKind::Divergence => MeasureHandle::divergence(label, move |pair| {
            evaluate(&shared, pair.p(), Some(pair.r()), q).map_err(to_measure_error)
        }),
    })
}

/// [`parse`] followed by [`as_measure`].
pub fn compile(
    source: &str,
    kind: MeasureKind,
    q: Option<QParameter>,
) -> Result<MeasureHandle, DslError> {
    as_measure(&parse(source)?, kind, q)
}

//! Information measures on finite probability distributions.
//!
//! The crate evaluates Shannon entropy `H`, relative entropy `D`, and their
//! q-logarithmic deformations `S_q` and `D_q`, and treats the axioms that
//! single these measures out (symmetry, vanishing, chain rules,
//! q-multiplicativity) as executable checks:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`measures`] | distributions, pairs in A_n, the five measures |
//! | [`composition`] | `∘`, `⊗`, `⊕`, permutations, zero-block splitting |
//! | [`handle`] | type-erased candidate measures |
//! | [`audit`] | residual checks and seeded randomized audits |
//! | [`characterization`] | L-function, log-fit, constant extraction |
//! | [`dsl`] | per-index summand expressions as candidate measures |
//! | [`cli`] | the `infomeasure` command line |
//!
//! ```
//! use infomeasure::measures::{q_entropy, Distribution, QParameter};
//!
//! let p = Distribution::new(vec![0.5, 0.5]).unwrap();
//! let s2 = q_entropy(&p, QParameter::new(2.0).unwrap());
//! assert!((s2 - 0.5).abs() < 1e-15);
//! ```
#![forbid(unsafe_code)]

pub mod audit;
pub mod characterization;
pub mod cli;
pub mod composition;
pub mod dsl;
pub mod handle;
pub mod measures;
pub mod sum;

pub use handle::{MeasureHandle, MeasureKind, Subject};
pub use measures::{AbsolutelyContinuousPair, Distribution, MeasureError, QParameter};

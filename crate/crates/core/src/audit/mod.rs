//! Randomized axiom audits.
//!
//! [`run_audit`] draws seeded instances for each requested [`Axiom`],
//! evaluates the matching check from [`checks`], and aggregates the
//! residuals into an [`AuditReport`]. Trial `i` of axiom `a` uses its own
//! generator seeded from `(seed, a, i)`, so results do not depend on how
//! rayon schedules the trials.

pub mod checks;
pub mod sampling;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composition::{CompositionError, Permutation};
use crate::handle::{HandleError, MeasureHandle, MeasureKind, Subject};
use crate::measures::{AbsolutelyContinuousPair, Distribution, MeasureError, QParameter};
use crate::sum::CompensatedSum;

pub use checks::{
    chain_rule_signed, check_chain_rule, check_chain_rule_q, check_q_chain, check_q_mult,
    check_q_rel_mult, check_recursivity, check_recursivity_q, check_symmetry, check_two_block,
    check_two_block_q, check_vanishing, split_step_signed, telescoped_chain_residual,
};
pub use sampling::{sample_distribution, sample_pair, sample_permutation, sub_seed, trial_rng};

/// Hypothesis of the characterization theorems that has no finite-sample test.
pub const NOT_CHECKED: &[&str] = &["measurability"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error(transparent)]
    Handle(#[from] HandleError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error("axiom '{axiom}' does not apply to {kind}-type measures")]
    AxiomKindMismatch { axiom: Axiom, kind: MeasureKind },
    #[error("invalid audit configuration: {0}")]
    InvalidConfig(String),
}

impl From<MeasureError> for AuditError {
    fn from(e: MeasureError) -> Self {
        AuditError::Handle(HandleError::Measure(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Symmetry,
    Vanishing,
    Chain,
    Recursivity,
    TwoBlock,
    QChain,
    QMult,
    QRelMult,
}

impl Axiom {
    pub const ALL: [Axiom; 8] = [
        Axiom::Symmetry,
        Axiom::Vanishing,
        Axiom::Chain,
        Axiom::Recursivity,
        Axiom::TwoBlock,
        Axiom::QChain,
        Axiom::QMult,
        Axiom::QRelMult,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::Symmetry => "symmetry",
            Axiom::Vanishing => "vanishing",
            Axiom::Chain => "chain",
            Axiom::Recursivity => "recursivity",
            Axiom::TwoBlock => "two-block",
            Axiom::QChain => "q-chain",
            Axiom::QMult => "q-mult",
            Axiom::QRelMult => "q-rel-mult",
        }
    }

    pub fn applies_to(self, kind: MeasureKind) -> bool {
        match self {
            Axiom::Symmetry => true,
            Axiom::QChain | Axiom::QMult => kind == MeasureKind::Entropy,
            Axiom::Vanishing
            | Axiom::Chain
            | Axiom::Recursivity
            | Axiom::TwoBlock
            | Axiom::QRelMult => kind == MeasureKind::Divergence,
        }
    }

    /// Every axiom applicable to `kind`, in declaration order.
    pub fn defaults_for(kind: MeasureKind) -> Vec<Axiom> {
        Self::ALL
            .into_iter()
            .filter(|a| a.applies_to(kind))
            .collect()
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axiom {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|a| a.name()).collect();
                format!(
                    "unknown axiom '{s}' (expected one of: {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    /// Largest distribution length drawn.
    pub max_n: usize,
    /// Largest number of blocks in composition instances.
    pub max_blocks: usize,
    /// Probability that a sampled pair has zeros in `p`.
    pub zero_probability: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            max_n: 8,
            max_blocks: 4,
            zero_probability: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub axioms: Vec<Axiom>,
    pub trials: usize,
    pub sampling: SamplingConfig,
    pub tol: f64,
    pub seed: u64,
    /// Exponent of the chain-rule block weights.
    pub q: QParameter,
}

impl AuditConfig {
    pub fn new(axioms: Vec<Axiom>) -> Self {
        Self {
            axioms,
            trials: 1000,
            sampling: SamplingConfig::default(),
            tol: 1e-9,
            seed: 0,
            q: QParameter::ONE,
        }
    }

    fn validate(&self, kind: MeasureKind) -> Result<(), AuditError> {
        if self.trials == 0 {
            return Err(AuditError::InvalidConfig(
                "trials must be at least 1".into(),
            ));
        }
        if self.sampling.max_n == 0 || self.sampling.max_blocks == 0 {
            return Err(AuditError::InvalidConfig(
                "max-n and max-blocks must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.sampling.zero_probability) {
            return Err(AuditError::InvalidConfig(
                "zero-pattern probability must lie in [0, 1)".into(),
            ));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(AuditError::InvalidConfig(
                "tolerance must be nonnegative".into(),
            ));
        }
        if self.axioms.is_empty() {
            return Err(AuditError::InvalidConfig("no axioms requested".into()));
        }
        for &axiom in &self.axioms {
            if !axiom.applies_to(kind) {
                return Err(AuditError::AxiomKindMismatch { axiom, kind });
            }
        }
        Ok(())
    }
}

/// The arguments a single check consumed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum AuditInstance {
    Symmetry {
        subject: Subject,
        sigma: Permutation,
    },
    Vanishing {
        p: Distribution,
    },
    Chain {
        w: AbsolutelyContinuousPair,
        parts: Vec<AbsolutelyContinuousPair>,
    },
    Recursivity {
        w: AbsolutelyContinuousPair,
        split: AbsolutelyContinuousPair,
    },
    TwoBlock {
        w: AbsolutelyContinuousPair,
        first: AbsolutelyContinuousPair,
        second: AbsolutelyContinuousPair,
    },
    QChain {
        w: Distribution,
        parts: Vec<Distribution>,
    },
    QMult {
        w: Distribution,
        p: Distribution,
    },
    QRelMult {
        w: AbsolutelyContinuousPair,
        p: AbsolutelyContinuousPair,
    },
}

impl AuditInstance {
    pub fn sample<R: Rng + ?Sized>(
        axiom: Axiom,
        kind: MeasureKind,
        cfg: &SamplingConfig,
        rng: &mut R,
    ) -> Self {
        let z = cfg.zero_probability;
        let size = |rng: &mut R| rng.gen_range(1..=cfg.max_n);
        match axiom {
            Axiom::Symmetry => {
                let n = size(rng);
                let pair = sample_pair(n, z, rng);
                let subject = match kind {
                    MeasureKind::Entropy => Subject::Distribution(pair.into_parts().0),
                    MeasureKind::Divergence => Subject::Pair(pair),
                };
                let sigma = sample_permutation(n, rng);
                AuditInstance::Symmetry { subject, sigma }
            }
            Axiom::Vanishing => {
                let n = size(rng);
                AuditInstance::Vanishing {
                    p: sample_pair(n, z, rng).into_parts().0,
                }
            }
            Axiom::Chain => {
                let blocks = rng.gen_range(1..=cfg.max_blocks);
                let w = sample_pair(blocks, z, rng);
                let parts = (0..blocks)
                    .map(|_| {
                        let k = size(rng);
                        sample_pair(k, z, rng)
                    })
                    .collect();
                AuditInstance::Chain { w, parts }
            }
            Axiom::Recursivity => {
                let n = size(rng);
                let w = sample_pair(n, z, rng);
                let split = sample_pair(2, z, rng);
                AuditInstance::Recursivity { w, split }
            }
            Axiom::TwoBlock => {
                let w = sample_pair(2, z, rng);
                let k = size(rng);
                let first = sample_pair(k, z, rng);
                let l = size(rng);
                let second = sample_pair(l, z, rng);
                AuditInstance::TwoBlock { w, first, second }
            }
            Axiom::QChain => {
                let blocks = rng.gen_range(1..=cfg.max_blocks);
                let w = sample_pair(blocks, z, rng).into_parts().0;
                let parts = (0..blocks)
                    .map(|_| {
                        let k = size(rng);
                        sample_pair(k, z, rng).into_parts().0
                    })
                    .collect();
                AuditInstance::QChain { w, parts }
            }
            Axiom::QMult => {
                let blocks = rng.gen_range(1..=cfg.max_blocks);
                let w = sample_pair(blocks, z, rng).into_parts().0;
                let k = size(rng);
                let p = sample_pair(k, z, rng).into_parts().0;
                AuditInstance::QMult { w, p }
            }
            Axiom::QRelMult => {
                let blocks = rng.gen_range(1..=cfg.max_blocks);
                let w = sample_pair(blocks, z, rng);
                let k = size(rng);
                let p = sample_pair(k, z, rng);
                AuditInstance::QRelMult { w, p }
            }
        }
    }

    pub fn axiom(&self) -> Axiom {
        match self {
            AuditInstance::Symmetry { .. } => Axiom::Symmetry,
            AuditInstance::Vanishing { .. } => Axiom::Vanishing,
            AuditInstance::Chain { .. } => Axiom::Chain,
            AuditInstance::Recursivity { .. } => Axiom::Recursivity,
            AuditInstance::TwoBlock { .. } => Axiom::TwoBlock,
            AuditInstance::QChain { .. } => Axiom::QChain,
            AuditInstance::QMult { .. } => Axiom::QMult,
            AuditInstance::QRelMult { .. } => Axiom::QRelMult,
        }
    }

    /// Residual of the matching check, with `q` as block-weight exponent.
    pub fn residual(&self, m: &MeasureHandle, q: QParameter) -> Result<f64, AuditError> {
        match self {
            AuditInstance::Symmetry { subject, sigma } => check_symmetry(m, subject, sigma),
            AuditInstance::Vanishing { p } => check_vanishing(m, p),
            AuditInstance::Chain { w, parts } => check_chain_rule_q(m, q, w, parts),
            AuditInstance::Recursivity { w, split } => check_recursivity_q(m, q, w, split),
            AuditInstance::TwoBlock { w, first, second } => {
                check_two_block_q(m, q, w, first, second)
            }
            AuditInstance::QChain { w, parts } => check_q_chain(m, q, w, parts),
            AuditInstance::QMult { w, p } => check_q_mult(m, q, w, p),
            AuditInstance::QRelMult { w, p } => check_q_rel_mult(m, q, w, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub index: usize,
    pub instance: AuditInstance,
    /// `+∞` when the measure could not be evaluated on the instance.
    pub residual: f64,
}

/// Samples and checks `cfg.trials` instances of `axiom`, in trial order.
pub fn evaluate_trials(
    m: &MeasureHandle,
    axiom: Axiom,
    cfg: &AuditConfig,
) -> Result<Vec<TrialOutcome>, AuditError> {
    let kind = m.kind();
    if !axiom.applies_to(kind) {
        return Err(AuditError::AxiomKindMismatch { axiom, kind });
    }
    (0..cfg.trials)
        .into_par_iter()
        .map(|index| {
            let mut rng = trial_rng(cfg.seed, axiom.name(), index as u64);
            let instance = AuditInstance::sample(axiom, kind, &cfg.sampling, &mut rng);
            let residual = match instance.residual(m, cfg.q) {
                Ok(r) if r.is_nan() => f64::INFINITY,
                Ok(r) => r,
                Err(AuditError::Handle(HandleError::Measure(_))) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            Ok(TrialOutcome {
                index,
                instance,
                residual,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomRecord {
    pub name: Axiom,
    pub trials: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub worst_instance: AuditInstance,
    pub pass: bool,
}

impl AxiomRecord {
    /// Aggregates outcomes; ties for the worst residual go to the earliest trial.
    pub fn from_outcomes(axiom: Axiom, outcomes: &[TrialOutcome], tol: f64) -> Self {
        assert!(!outcomes.is_empty(), "at least one trial");
        let mut worst = &outcomes[0];
        let mut total = CompensatedSum::new();
        for o in outcomes {
            if o.residual > worst.residual {
                worst = o;
            }
            total.add(o.residual);
        }
        let max_residual = worst.residual;
        Self {
            name: axiom,
            trials: outcomes.len(),
            max_residual,
            mean_residual: total.value() / outcomes.len() as f64,
            worst_instance: worst.instance.clone(),
            pass: max_residual <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub measure: String,
    pub seed: u64,
    pub tol: f64,
    pub axioms: Vec<AxiomRecord>,
    pub not_checked: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.axioms.iter().all(|a| a.pass)
    }

    pub fn record(&self, axiom: Axiom) -> Option<&AxiomRecord> {
        self.axioms.iter().find(|a| a.name == axiom)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }
}

pub fn run_audit(m: &MeasureHandle, cfg: &AuditConfig) -> Result<AuditReport, AuditError> {
    cfg.validate(m.kind())?;
    let mut axioms = Vec::with_capacity(cfg.axioms.len());
    for &axiom in &cfg.axioms {
        let outcomes = evaluate_trials(m, axiom, cfg)?;
        axioms.push(AxiomRecord::from_outcomes(axiom, &outcomes, cfg.tol));
    }
    Ok(AuditReport {
        measure: m.label().to_string(),
        seed: cfg.seed,
        tol: cfg.tol,
        axioms,
        not_checked: NOT_CHECKED.iter().map(|s| s.to_string()).collect(),
    })
}

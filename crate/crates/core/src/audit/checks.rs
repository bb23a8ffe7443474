//! Residuals of the individual axioms and identities.
//!
//! Each `check_*` returns an absolute residual `|lhs − rhs|`. The `*_signed`
//! variants return `lhs − rhs` and exist so that residuals of several
//! instances can be combined (see [`telescoped_chain_residual`]).
//!
//! Chain-type checks on divergences take a [`QParameter`] for their block
//! weights `w_i^q·w̃_i^(1−q)`; with [`QParameter::ONE`] these are the plain
//! weights `w_i`.

use crate::composition::{
    compose, pair_compose, pair_direct_sum, permute, permute_pair, tensor, CompositionError,
    Permutation,
};
use crate::handle::{MeasureHandle, MeasureKind, Subject};
use crate::measures::{AbsolutelyContinuousPair, Distribution, QParameter};
use crate::sum::{compensated_sum, CompensatedSum};

use super::AuditError;

pub fn check_symmetry(
    m: &MeasureHandle,
    subject: &Subject,
    sigma: &Permutation,
) -> Result<f64, AuditError> {
    let permuted = match subject {
        Subject::Distribution(p) => Subject::Distribution(permute(p, sigma)?),
        Subject::Pair(pair) => Subject::Pair(permute_pair(pair, sigma)?),
    };
    Ok((m.evaluate(subject)? - m.evaluate(&permuted)?).abs())
}

pub fn check_vanishing(m: &MeasureHandle, p: &Distribution) -> Result<f64, AuditError> {
    m.expect_kind(MeasureKind::Divergence)?;
    Ok(
        m.eval_divergence(&AbsolutelyContinuousPair::diagonal(p.clone()))?
            .abs(),
    )
}

/// `m(w∘p ‖ w̃∘p̃) − m(w‖w̃) − Σ_{w_i>0} w_i^q w̃_i^(1−q)·m(pⁱ‖p̃ⁱ)`.
pub fn chain_rule_signed(
    m: &MeasureHandle,
    q: QParameter,
    wpair: &AbsolutelyContinuousPair,
    parts: &[AbsolutelyContinuousPair],
) -> Result<f64, AuditError> {
    let composed = pair_compose(wpair, parts)?;
    let mut rhs = CompensatedSum::new();
    rhs.add(m.eval_divergence(wpair)?);
    for (i, part) in parts.iter().enumerate() {
        let weight = q.chain_weight(wpair.p().weights()[i], wpair.r().weights()[i]);
        if weight != 0.0 {
            rhs.add(weight * m.eval_divergence(part)?);
        }
    }
    Ok(m.eval_divergence(&composed)? - rhs.value())
}

pub fn check_chain_rule(
    m: &MeasureHandle,
    wpair: &AbsolutelyContinuousPair,
    parts: &[AbsolutelyContinuousPair],
) -> Result<f64, AuditError> {
    check_chain_rule_q(m, QParameter::ONE, wpair, parts)
}

pub fn check_chain_rule_q(
    m: &MeasureHandle,
    q: QParameter,
    wpair: &AbsolutelyContinuousPair,
    parts: &[AbsolutelyContinuousPair],
) -> Result<f64, AuditError> {
    Ok(chain_rule_signed(m, q, wpair, parts)?.abs())
}

/// `m(split at position) − m(w‖w̃) − c·m(split)`, where `c` is the weight of
/// block `position`. Unsplit blocks contribute no term, so this is the
/// recursivity equation with the split moved to `position`.
pub fn split_step_signed(
    m: &MeasureHandle,
    q: QParameter,
    wpair: &AbsolutelyContinuousPair,
    position: usize,
    split: &AbsolutelyContinuousPair,
) -> Result<f64, AuditError> {
    if split.len() != 2 {
        return Err(CompositionError::LengthMismatch {
            left: split.len(),
            right: 2,
        }
        .into());
    }
    if position >= wpair.len() {
        return Err(CompositionError::LengthMismatch {
            left: position,
            right: wpair.len(),
        }
        .into());
    }
    let composed = split_pair_at(wpair, position, split)?;
    let weight = q.chain_weight(wpair.p().weights()[position], wpair.r().weights()[position]);
    let mut rhs = m.eval_divergence(wpair)?;
    if weight != 0.0 {
        rhs += weight * m.eval_divergence(split)?;
    }
    Ok(m.eval_divergence(&composed)? - rhs)
}

/// Recursivity: the chain rule with `k_1 = 2, k_2 = ⋯ = k_n = 1`.
pub fn check_recursivity(
    m: &MeasureHandle,
    wpair: &AbsolutelyContinuousPair,
    split: &AbsolutelyContinuousPair,
) -> Result<f64, AuditError> {
    check_recursivity_q(m, QParameter::ONE, wpair, split)
}

pub fn check_recursivity_q(
    m: &MeasureHandle,
    q: QParameter,
    wpair: &AbsolutelyContinuousPair,
    split: &AbsolutelyContinuousPair,
) -> Result<f64, AuditError> {
    Ok(split_step_signed(m, q, wpair, 0, split)?.abs())
}

/// The `n = 2` chain rule: `m(w·p ⊕ (1−w)·r ‖ w̃·p̃ ⊕ (1−w̃)·r̃)`.
pub fn check_two_block(
    m: &MeasureHandle,
    wpair: &AbsolutelyContinuousPair,
    first: &AbsolutelyContinuousPair,
    second: &AbsolutelyContinuousPair,
) -> Result<f64, AuditError> {
    check_two_block_q(m, QParameter::ONE, wpair, first, second)
}

pub fn check_two_block_q(
    m: &MeasureHandle,
    q: QParameter,
    wpair: &AbsolutelyContinuousPair,
    first: &AbsolutelyContinuousPair,
    second: &AbsolutelyContinuousPair,
) -> Result<f64, AuditError> {
    // validates the n = 2 shape before the general chain rule runs
    pair_direct_sum(wpair, first, second)?;
    check_chain_rule_q(m, q, wpair, &[first.clone(), second.clone()])
}

pub fn check_q_chain(
    m: &MeasureHandle,
    q: QParameter,
    w: &Distribution,
    parts: &[Distribution],
) -> Result<f64, AuditError> {
    let composed = compose(w, parts)?;
    let mut rhs = CompensatedSum::new();
    rhs.add(m.eval_entropy(w)?);
    for (&wi, part) in w.weights().iter().zip(parts) {
        let weight = q.power_weight(wi);
        if weight != 0.0 {
            rhs.add(weight * m.eval_entropy(part)?);
        }
    }
    Ok((m.eval_entropy(&composed)? - rhs.value()).abs())
}

pub fn check_q_mult(
    m: &MeasureHandle,
    q: QParameter,
    w: &Distribution,
    p: &Distribution,
) -> Result<f64, AuditError> {
    let lhs = m.eval_entropy(&tensor(w, p))?;
    let power_sum = compensated_sum(w.weights().iter().map(|&x| q.power_weight(x)));
    let rhs = m.eval_entropy(w)? + power_sum * m.eval_entropy(p)?;
    Ok((lhs - rhs).abs())
}

pub fn check_q_rel_mult(
    m: &MeasureHandle,
    q: QParameter,
    wpair: &AbsolutelyContinuousPair,
    ppair: &AbsolutelyContinuousPair,
) -> Result<f64, AuditError> {
    let big =
        AbsolutelyContinuousPair::new(tensor(wpair.p(), ppair.p()), tensor(wpair.r(), ppair.r()))?;
    let lhs = m.eval_divergence(&big)?;
    let weight_sum = compensated_sum(
        wpair
            .p()
            .weights()
            .iter()
            .zip(wpair.r().weights())
            .map(|(&a, &b)| q.chain_weight(a, b)),
    );
    let rhs = m.eval_divergence(wpair)? + weight_sum * m.eval_divergence(ppair)?;
    Ok((lhs - rhs).abs())
}

/// Rebuilds a chain-rule instance from single binary splits and returns
/// the combination of their signed residuals that equals the signed chain
/// residual algebraically:
///
/// `Σ ρ_big − Σ_i c_i·(m((1)‖(1)) + Σ_j ρ_ij)`
///
/// where `ρ_big` are the split steps turning `(w, w̃)` into the composed pair,
/// `ρ_ij` the steps building `(pⁱ, p̃ⁱ)` from `((1), (1))`, and `c_i` the
/// block weights. Agreement with [`chain_rule_signed`] holds for every
/// measure; a measure that satisfies recursivity has all `ρ` equal to zero.
pub fn telescoped_chain_residual(
    m: &MeasureHandle,
    q: QParameter,
    wpair: &AbsolutelyContinuousPair,
    parts: &[AbsolutelyContinuousPair],
) -> Result<f64, AuditError> {
    if parts.len() != wpair.len() {
        return Err(CompositionError::PartCount {
            expected: wpair.len(),
            actual: parts.len(),
        }
        .into());
    }
    let trivial_value = m.eval_divergence(&AbsolutelyContinuousPair::trivial())?;
    let mut big_steps = CompensatedSum::new();
    let mut block_terms = CompensatedSum::new();
    let mut current = wpair.clone();
    let mut offset = 0;

    for (i, part) in parts.iter().enumerate() {
        let splits = binary_splits(part)?;
        let mut standalone = AbsolutelyContinuousPair::trivial();
        let mut block_steps = CompensatedSum::new();
        for (j, split) in splits.iter().enumerate() {
            big_steps.add(split_step_signed(m, q, &current, offset + j, split)?);
            current = split_pair_at(&current, offset + j, split)?;
            block_steps.add(split_step_signed(m, q, &standalone, j, split)?);
            standalone = split_pair_at(&standalone, j, split)?;
        }
        let weight = q.chain_weight(wpair.p().weights()[i], wpair.r().weights()[i]);
        if weight != 0.0 {
            block_terms.add(weight * (trivial_value + block_steps.value()));
        }
        offset += part.len();
    }
    Ok(big_steps.value() - block_terms.value())
}

fn split_pair_at(
    pair: &AbsolutelyContinuousPair,
    position: usize,
    split: &AbsolutelyContinuousPair,
) -> Result<AbsolutelyContinuousPair, CompositionError> {
    let mut parts = vec![AbsolutelyContinuousPair::trivial(); pair.len()];
    parts[position] = split.clone();
    pair_compose(pair, &parts)
}

/// The `k − 1` binary pairs peeling a `k`-element pair off one entry at a
/// time: step `j` splits the tail mass `T_j = Σ_{l≥j} x_l` into
/// `(x_j/T_j, T_{j+1}/T_j)` on each coordinate. Tails with zero mass get an
/// arbitrary admissible pair; their blocks carry zero mass and zero weight.
fn binary_splits(
    part: &AbsolutelyContinuousPair,
) -> Result<Vec<AbsolutelyContinuousPair>, AuditError> {
    let k = part.len();
    let p_tails = suffix_sums(part.p().weights());
    let r_tails = suffix_sums(part.r().weights());
    let mut out = Vec::with_capacity(k.saturating_sub(1));
    for j in 0..k.saturating_sub(1) {
        let r_bin = if r_tails[j] > 0.0 {
            let head = part.r().weights()[j] / r_tails[j];
            let tail = r_tails[j + 1] / r_tails[j];
            [head, tail]
        } else {
            [0.5, 0.5]
        };
        let p_bin = if p_tails[j] > 0.0 {
            [
                part.p().weights()[j] / p_tails[j],
                p_tails[j + 1] / p_tails[j],
            ]
        } else if r_bin[0] > 0.0 {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        };
        out.push(AbsolutelyContinuousPair::new(
            Distribution::normalized(p_bin.to_vec())?,
            Distribution::normalized(r_bin.to_vec())?,
        )?);
    }
    Ok(out)
}

fn suffix_sums(values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; values.len() + 1];
    for j in (0..values.len()).rev() {
        out[j] = compensated_sum(values[j..].iter().copied());
    }
    out
}

//! Fidelity-descent learning: the negative-log overlap loss, its exact
//! gradients, the training loop, classification and warm-started sweeps.

mod classify;
mod target;
mod train;

pub use classify::{basis_for, classify, classify_with, warm_start_sweep, Classification, LearnerSpec, Verdict};
pub use target::{Snapshot, Target, TargetDecomposition};
pub use train::{train, Best, IterRecord, LearnConfig, Monitor, Optimizer, StopReason, TrainReport, SERIES_CSV_HEADER};

use crate::ansatz::{Ansatz, AnsatzKind, Forward};
use crate::{Error, Result, C64};

/// Loss value together with its gradient with respect to every flat parameter.
#[derive(Clone, Debug)]
pub struct LossGrad {
    pub loss: f64,
    /// `|<v|t>|^2 / (<v|v><t|t>)` of the (vectorised) states.
    pub overlap_fidelity: f64,
    pub grad: Vec<f64>,
}

struct Overlap {
    forward: Forward,
    values: Vec<C64>,
    norm_sq: f64,
    overlap: C64,
    target_norm_sq: f64,
}

fn overlap(ansatz: &Ansatz, target: &[C64]) -> Result<Overlap> {
    if target.len() != ansatz.output_len() {
        return Err(Error::DimMismatch { left: ansatz.output_len(), right: target.len() });
    }
    let forward = ansatz.forward()?;
    let values = forward.values();
    let norm_sq: f64 = values.iter().map(|z| z.norm_sqr()).sum();
    if !(norm_sq > 1e-300) {
        return Err(Error::ZeroNorm);
    }
    let overlap: C64 = values.iter().zip(target).map(|(v, t)| v.conj() * t).sum();
    let target_norm_sq = target.iter().map(|z| z.norm_sqr()).sum();
    Ok(Overlap { forward, values, norm_sq, overlap, target_norm_sq })
}

fn loss_of(o: &Overlap) -> (f64, f64) {
    let fid = (o.overlap.norm_sqr() / (o.norm_sq * o.target_norm_sq)).min(1.0);
    let loss = if fid > 0.0 { (-0.5 * fid.ln()).max(0.0) } else { f64::INFINITY };
    (loss, fid)
}

/// `-ln sqrt(|<v|t>|^2 / (<v|v><t|t>))`; `+inf` for orthogonal states.
///
/// `target` is a state vector for pure ansatzes and a row-major vectorised
/// density matrix for mixed ones.
pub fn loss(ansatz: &Ansatz, target: &[C64]) -> Result<f64> {
    Ok(loss_of(&overlap(ansatz, target)?).0)
}

/// Loss and exact gradient.
///
/// With `v` the network output, `N = <v|v>` and `O = <v|t>`, every real
/// parameter has `dL/dtheta = Re sum_x K_x d ln v_x / d theta` where
/// `K_x = |v_x|^2 / N - v_x t_x^* / O^*`.
pub fn loss_and_grad(ansatz: &Ansatz, target: &[C64]) -> Result<LossGrad> {
    let o = overlap(ansatz, target)?;
    let (loss, overlap_fidelity) = loss_of(&o);
    if o.overlap.norm() < 1e-300 * o.norm_sq.sqrt() {
        return Err(Error::ZeroOverlap);
    }
    let inv_o = o.overlap.conj().inv();
    let coeff: Vec<C64> =
        o.values.iter().zip(target).map(|(v, t)| v.norm_sqr() / o.norm_sq - v * t.conj() * inv_o).collect();
    let grad = ansatz.backprop_with(&o.forward, &coeff)?;
    Ok(LossGrad { loss, overlap_fidelity, grad })
}

/// Gradient for pure ansatzes (complex or amplitude/phase).
pub fn grad_pure(ansatz: &Ansatz, target: &[C64]) -> Result<LossGrad> {
    if ansatz.is_mixed() {
        return Err(Error::BadParam { name: "ansatz", value: f64::NAN, reason: "expected a pure ansatz" });
    }
    loss_and_grad(ansatz, target)
}

/// Gradient for mixed ansatzes over the vectorised density matrix.
pub fn grad_mixed(ansatz: &Ansatz, target: &[C64]) -> Result<LossGrad> {
    if !ansatz.is_mixed() {
        return Err(Error::BadParam { name: "ansatz", value: f64::NAN, reason: "expected a mixed ansatz" });
    }
    loss_and_grad(ansatz, target)
}

/// Whether a kind is trained against the vectorised density matrix.
pub fn uses_vectorised_target(kind: AnsatzKind) -> bool {
    kind.is_mixed()
}

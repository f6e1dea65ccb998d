use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::target::Target;
use super::train::{train, LearnConfig, TrainReport};
use crate::ansatz::{Ansatz, AnsatzKind, Basis, QuditEncoding, Shape};
use crate::separability::{default_mask, PartitionSet};
use crate::{Error, Result};

/// Kind and layer sizes of a learner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: AnsatzKind,
    pub n_hidden: usize,
    pub n_mixing: usize,
}

impl LearnerSpec {
    pub fn new(kind: AnsatzKind, n_hidden: usize, n_mixing: usize) -> Self {
        LearnerSpec { kind, n_hidden, n_mixing }
    }

    /// A reasonable default for the target: complex RBM for pure states,
    /// mixed NDM otherwise, hidden layers as wide as the visible layer.
    pub fn default_for(target: &Target) -> Self {
        let basis = basis_for(target.density().dims()).expect("target dims validated on construction");
        let nv = basis.n_visible();
        if target.is_pure() {
            LearnerSpec::new(AnsatzKind::PureComplex, 2 * nv, 0)
        } else {
            LearnerSpec::new(AnsatzKind::MixedNdm, 2 * nv, 2 * nv)
        }
    }

    pub fn shape(&self) -> Shape {
        Shape { kind: self.kind, n_hidden: self.n_hidden, n_mixing: self.n_mixing }
    }

    /// Seeded Gaussian initialisation, masked according to `partition` when given.
    pub fn build(&self, dims: &[usize], partition: Option<&PartitionSet>, seed: u64) -> Result<Ansatz> {
        let basis = basis_for(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ansatz = Ansatz::random(basis, self.shape(), &mut rng);
        match partition {
            Some(k) if self.kind.has_pure_layer() => {
                let mask = default_mask(k, ansatz.basis(), self.n_hidden)?;
                ansatz.with_mask(&mask)
            }
            _ => Ok(ansatz),
        }
    }
}

/// The qudit basis for a list of equal local dimensions.
pub fn basis_for(dims: &[usize]) -> Result<Basis> {
    let d = dims[0];
    if let Some(&other) = dims.iter().find(|&&x| x != d) {
        return Err(Error::DimMismatch { left: d, right: other });
    }
    Ok(Basis::new(QuditEncoding::natural(d)?, dims.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    KSeparable,
    EntangledBeyondK,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub partition: String,
    /// Best free-learner run.
    pub free: TrainReport,
    /// Best restricted run.
    pub masked: TrainReport,
    pub masked_restarts: usize,
    /// Best free fidelity minus best restricted fidelity.
    pub margin: f64,
}

/// Runs restarts until one reaches the threshold; returns the best report and the count used.
fn best_of(
    spec: LearnerSpec,
    target: &Target,
    partition: Option<&PartitionSet>,
    config: &LearnConfig,
    seed_offset: u64,
) -> Result<(TrainReport, usize)> {
    let restarts = config.restarts.max(1);
    let mut best: Option<TrainReport> = None;
    for r in 0..restarts {
        let seed = config.seed.wrapping_add(seed_offset).wrapping_add(r as u64);
        let ansatz = spec.build(target.density().dims(), partition, seed)?;
        let cfg = LearnConfig { seed, ..config.clone() };
        let report = train(ansatz, target, &cfg)?;
        let done = report.reached_threshold;
        if best.as_ref().is_none_or(|b| report.best_fidelity.value > b.best_fidelity.value) {
            best = Some(report);
        }
        if done {
            return Ok((best.expect("set above"), r + 1));
        }
    }
    Ok((best.expect("at least one restart"), restarts))
}

/// Classification with the default learners for the target.
pub fn classify(target: &Target, partition: &PartitionSet, config: &LearnConfig) -> Result<Classification> {
    let spec = LearnerSpec::default_for(target);
    classify_with(target, partition, spec, spec, config)
}

/// Trains a free learner and a `partition`-restricted one and compares them
/// against the fidelity threshold.
pub fn classify_with(
    target: &Target,
    partition: &PartitionSet,
    free: LearnerSpec,
    masked: LearnerSpec,
    config: &LearnConfig,
) -> Result<Classification> {
    let cfg = LearnConfig { stop_at_threshold: true, ..config.clone() };
    let (free_report, _) = best_of(free, target, None, &cfg, 0)?;
    let (masked_report, used) = best_of(masked, target, Some(partition), &cfg, 1_000)?;
    let verdict = if !free_report.reached_threshold {
        Verdict::Inconclusive
    } else if masked_report.reached_threshold {
        Verdict::KSeparable
    } else {
        Verdict::EntangledBeyondK
    };
    let margin = free_report.best_fidelity.value - masked_report.best_fidelity.value;
    Ok(Classification {
        verdict,
        partition: partition.to_string(),
        free: free_report,
        masked: masked_report,
        masked_restarts: used,
        margin,
    })
}

/// Trains one learner per target in order, each starting from the previous
/// learner's final parameters; `warm_iters` caps the budget after the first.
pub fn warm_start_sweep(
    targets: &[Target],
    spec: LearnerSpec,
    partition: Option<&PartitionSet>,
    config: &LearnConfig,
    warm_iters: Option<usize>,
) -> Result<Vec<TrainReport>> {
    let mut out: Vec<TrainReport> = Vec::with_capacity(targets.len());
    for (i, target) in targets.iter().enumerate() {
        let mut ansatz = spec.build(target.density().dims(), partition, config.seed)?;
        let mut cfg = config.clone();
        if let Some(prev) = out.last() {
            ansatz.load_params(&prev.final_ansatz()?.params().clone())?;
            if let Some(w) = warm_iters {
                cfg.max_iters = w;
            }
        }
        let report = train(ansatz, target, &cfg)?;
        debug_assert!(i == out.len());
        out.push(report);
    }
    Ok(out)
}

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::target::{Snapshot, Target};
use super::{loss_and_grad, LossGrad};
use crate::ansatz::{Ansatz, AnsatzDocument, AnsatzKind};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    Fidelity,
    Qre,
    TraceDistance,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Optimizer {
    /// `theta <- theta - eta * grad`; a step that raises the loss is undone
    /// and `eta` halved.
    Gd,
    /// Adam moment estimates; every finite step is accepted.
    Adam { beta1: f64, beta2: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Fidelity threshold is `1 - epsilon`.
    pub epsilon: f64,
    pub restarts: usize,
    pub warm_start: bool,
    pub monitor: Vec<Monitor>,
    /// Monitored quantities are evaluated every this many iterations.
    pub monitor_every: usize,
    /// Stop as soon as the fidelity threshold is reached.
    pub stop_at_threshold: bool,
    pub optimizer: Optimizer,
    /// Give up once halving has pushed the learning rate below this.
    pub min_learning_rate: f64,
    /// Stop when the lowest loss seen fell by less than `plateau_tol` over `plateau_window` iterations.
    pub plateau_window: usize,
    pub plateau_tol: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            learning_rate: 0.05,
            max_iters: 20_000,
            seed: 0,
            epsilon: 1e-4,
            restarts: 5,
            warm_start: false,
            monitor: vec![Monitor::Fidelity],
            monitor_every: 25,
            stop_at_threshold: true,
            optimizer: Optimizer::Gd,
            min_learning_rate: 1e-12,
            plateau_window: 1000,
            plateau_tol: 1e-12,
        }
    }
}

impl LearnConfig {
    pub fn threshold(&self) -> f64 {
        1.0 - self.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::BadParam { name: "learning_rate", value: self.learning_rate, reason: "must be positive" });
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::BadParam { name: "epsilon", value: self.epsilon, reason: "must lie in (0, 1)" });
        }
        if self.monitor_every == 0 {
            return Err(Error::BadParam { name: "monitor_every", value: 0.0, reason: "must be at least 1" });
        }
        Ok(())
    }

    fn monitors(&self, m: Monitor) -> bool {
        self.monitor.contains(&m)
    }
}

/// One row of the training trace; monitored columns are filled every
/// `monitor_every` iterations and on the last one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub loss: f64,
    pub fidelity: Option<f64>,
    pub qre: Option<f64>,
    pub trace_distance: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Threshold,
    MaxIters,
    Plateau,
    LearningRateFloor,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Best {
    pub value: f64,
    pub iter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub kind: AnsatzKind,
    pub seed: u64,
    pub iterations: usize,
    pub series: Vec<IterRecord>,
    pub final_loss: f64,
    pub final_fidelity: f64,
    pub best_fidelity: Best,
    pub best_qre: Option<Best>,
    pub best_trace_distance: Option<Best>,
    pub threshold: f64,
    pub reached_threshold: bool,
    pub stop: StopReason,
    pub learning_rate: f64,
    pub halvings: usize,
    /// Largest clipped negative-eigenvalue mass seen while monitoring.
    pub max_clipped: f64,
    /// QRE at the best-fidelity point exceeds the best QRE by more than 1e-3.
    pub qre_fidelity_mismatch: bool,
    pub params: AnsatzDocument,
    /// Parameters at the best monitored QRE point.
    pub best_qre_params: Option<AnsatzDocument>,
}

pub const SERIES_CSV_HEADER: &str = "iter,loss,fidelity,qre,trace_distance";

fn csv_field(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x.is_infinite() => "inf".into(),
        Some(x) => format!("{x:e}"),
    }
}

impl TrainReport {
    pub fn final_ansatz(&self) -> Result<Ansatz> {
        Ansatz::from_document(&self.params)
    }

    /// Writes the per-iteration series as CSV with [`SERIES_CSV_HEADER`] columns.
    pub fn write_series_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SERIES_CSV_HEADER}")?;
        for r in &self.series {
            writeln!(
                out,
                "{},{:e},{},{},{}",
                r.iter,
                r.loss,
                csv_field(r.fidelity),
                csv_field(r.qre),
                csv_field(r.trace_distance)
            )?;
        }
        Ok(())
    }

    pub fn final_qre(&self) -> Option<f64> {
        self.series.iter().rev().find_map(|r| r.qre)
    }
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

/// Runs fidelity descent from the given starting point.
///
/// Masked (frozen) parameters receive zero gradient and therefore stay at
/// exactly zero. The run is fully deterministic.
pub fn train(mut ansatz: Ansatz, target: &Target, config: &LearnConfig) -> Result<TrainReport> {
    config.validate()?;
    let kind = ansatz.kind();
    let tvec = target.vector_for(kind)?.to_vec();
    let mut lr = config.learning_rate;
    let mut halvings = 0;
    let mut adam = AdamState { m: vec![0.0; ansatz.n_params()], v: vec![0.0; ansatz.n_params()], t: 0 };

    let mut series: Vec<IterRecord> = Vec::with_capacity(config.max_iters.min(1 << 16) + 1);
    let mut best_fid = Best { value: -1.0, iter: 0 };
    let mut qre_at_best_fid = f64::INFINITY;
    let mut best_qre: Option<Best> = None;
    let mut best_qre_params = None;
    let mut best_td: Option<Best> = None;
    let mut max_clipped: f64 = 0.0;
    let mut last_fid = 0.0;
    let mut reached = false;
    let mut stop = StopReason::MaxIters;

    let mut current: LossGrad = loss_and_grad(&ansatz, &tvec)?;
    // running minimum of the loss, indexed by iteration
    let mut best_loss: Vec<f64> = Vec::with_capacity(series.capacity());
    let mut iter = 0;
    loop {
        check_loss(iter, current.loss)?;
        let last = iter == config.max_iters;
        let mut rec = IterRecord { iter, loss: current.loss, fidelity: None, qre: None, trace_distance: None };
        if iter % config.monitor_every == 0 || last {
            let snap = target.snapshot(&ansatz)?;
            record(&mut rec, &snap, config);
            max_clipped = max_clipped.max(snap.clipped);
            last_fid = snap.fidelity;
            if snap.fidelity > best_fid.value {
                best_fid = Best { value: snap.fidelity, iter };
                qre_at_best_fid = snap.qre;
            }
            if config.monitors(Monitor::Qre) && best_qre.is_none_or(|b| snap.qre < b.value) {
                best_qre = Some(Best { value: snap.qre, iter });
                best_qre_params = Some(ansatz.to_document());
            }
            if config.monitors(Monitor::TraceDistance) && best_td.is_none_or(|b| snap.trace_distance < b.value) {
                best_td = Some(Best { value: snap.trace_distance, iter });
            }
            if snap.fidelity >= config.threshold() {
                reached = true;
            }
        }
        series.push(rec);
        best_loss.push(best_loss.last().map_or(current.loss, |b: &f64| b.min(current.loss)));
        if rec.fidelity.is_some() && reached && config.stop_at_threshold {
            stop = StopReason::Threshold;
            break;
        }
        if last {
            break;
        }
        if iter >= config.plateau_window {
            let old = best_loss[iter - config.plateau_window];
            if old - best_loss[iter] < config.plateau_tol && rec.fidelity.is_some() {
                stop = StopReason::Plateau;
                break;
            }
        }
        if lr < config.min_learning_rate && rec.fidelity.is_some() {
            stop = StopReason::LearningRateFloor;
            break;
        }

        let theta = ansatz.flat();
        // moments are committed only when the step is accepted
        let mut moments = None;
        let step = match config.optimizer {
            Optimizer::Gd => current.grad.iter().map(|g| lr * g).collect::<Vec<_>>(),
            Optimizer::Adam { beta1, beta2 } => {
                let t = adam.t + 1;
                let (b1t, b2t) = (1.0 - beta1.powi(t), 1.0 - beta2.powi(t));
                let m: Vec<f64> = adam.m.iter().zip(&current.grad).map(|(m, g)| beta1 * m + (1.0 - beta1) * g).collect();
                let v: Vec<f64> = adam.v.iter().zip(&current.grad).map(|(v, g)| beta2 * v + (1.0 - beta2) * g * g).collect();
                let step = m.iter().zip(&v).map(|(m, v)| lr * (m / b1t) / ((v / b2t).sqrt() + 1e-12)).collect();
                moments = Some(AdamState { m, v, t });
                step
            }
        };
        let next: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t - s).collect();
        ansatz.set_flat(&next)?;
        let candidate = loss_and_grad(&ansatz, &tvec);
        iter += 1;
        let accept = match (&candidate, config.optimizer) {
            (Ok(c), Optimizer::Gd) => c.loss.is_finite() && c.loss <= current.loss,
            (Ok(c), Optimizer::Adam { .. }) => c.loss.is_finite(),
            (Err(e), _) if rejectable(e) => false,
            (Err(e), _) => return Err(e.clone()),
        };
        if accept {
            current = candidate?;
            if let Some(state) = moments {
                adam = state;
            }
        } else {
            ansatz.set_flat(&theta)?;
            lr *= 0.5;
            halvings += 1;
        }
    }

    let final_loss = current.loss;
    let iterations = series.len();
    let qre_fidelity_mismatch = best_qre.is_some_and(|b| qre_at_best_fid - b.value > 1e-3);
    Ok(TrainReport {
        kind,
        seed: config.seed,
        iterations,
        series,
        final_loss,
        final_fidelity: last_fid,
        best_fidelity: best_fid,
        best_qre,
        best_trace_distance: best_td,
        threshold: config.threshold(),
        reached_threshold: reached,
        stop,
        learning_rate: lr,
        halvings,
        max_clipped,
        qre_fidelity_mismatch,
        params: ansatz.to_document(),
        best_qre_params,
    })
}

fn record(rec: &mut IterRecord, snap: &Snapshot, config: &LearnConfig) {
    rec.fidelity = Some(snap.fidelity);
    if config.monitors(Monitor::Qre) {
        rec.qre = Some(snap.qre);
    }
    if config.monitors(Monitor::TraceDistance) {
        rec.trace_distance = Some(snap.trace_distance);
    }
}

/// Numerical failures caused by an oversized step rather than by the inputs.
fn rejectable(e: &Error) -> bool {
    matches!(e, Error::BranchCut { .. } | Error::NonFinite { .. } | Error::ZeroNorm | Error::ZeroOverlap)
}

fn check_loss(iter: usize, loss: f64) -> Result<()> {
    if loss.is_nan() {
        return Err(Error::NonFinite { row: iter, col: 0 });
    }
    if loss > 1e6 {
        return Err(Error::Diverged { iter, loss });
    }
    Ok(())
}

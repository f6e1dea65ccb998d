//! Entanglement measures as constrained optimisations over separable
//! networks. Every distance-type estimate is an upper bound: the learner only
//! explores part of the separable set.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Ansatz, AnsatzKind};
use crate::learning::{basis_for, train, LearnConfig, LearnerSpec, Monitor, StopReason, Target, TrainReport};
use crate::separability::{presets, PartitionSet};
use crate::qmath::{qre, DensityMatrix};
use crate::states::{choi, depolarise, ChannelSpec};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    /// Maximum fidelity with a partition-separable pure state.
    #[serde(rename = "GME")]
    Gme,
    /// Trace distance to the separable set.
    #[serde(rename = "E_C1")]
    TraceDistance,
    /// `1 - F^2` with the root fidelity.
    #[serde(rename = "E_B")]
    Bures,
    /// Relative entropy of entanglement (bits).
    #[serde(rename = "E_R")]
    Ree,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Gme => "GME",
            Measure::TraceDistance => "E_C1",
            Measure::Bures => "E_B",
            Measure::Ree => "E_R",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Trace,
    Bures,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundKind {
    UpperBound,
    LowerBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub measure: Measure,
    pub partition: String,
    pub value: f64,
    pub bound: BoundKind,
    pub restarts: usize,
    pub best_seed: u64,
    /// `measure/partition/seed` of the run that produced `value`.
    pub trace_id: String,
    /// The best run ended on the threshold or a plateau rather than the iteration cap.
    pub converged: bool,
    pub iterations: usize,
    /// Largest clipped negative-eigenvalue mass seen in the best run.
    pub clipped: f64,
    /// Target has zero eigenvalues, so QRE relies on support containment.
    pub rank_deficient_target: bool,
    /// Sweep parameter of the earlier point whose learner state, mixed with
    /// white noise, produced `value`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carried_from: Option<f64>,
    /// Restarts whose fidelity reached the learning threshold.
    pub threshold_hits: usize,
    pub best: TrainReport,
}

/// Learner and optimiser settings shared by all measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasureConfig {
    pub learn: LearnConfig,
    /// Defaults to a pure complex learner for GME and a mixed NDM learner
    /// otherwise, both with hidden layers twice the visible width.
    pub learner: Option<LearnerSpec>,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig { learn: LearnConfig { stop_at_threshold: false, ..Default::default() }, learner: None }
    }
}

impl MeasureConfig {
    fn spec_for(&self, target: &Target, measure: Measure) -> LearnerSpec {
        self.learner.unwrap_or_else(|| {
            let nv = basis_for(target.density().dims()).map_or(0, |b| b.n_visible());
            match measure {
                Measure::Gme => LearnerSpec::new(AnsatzKind::PureComplex, 2 * nv, 0),
                _ => LearnerSpec::new(AnsatzKind::MixedNdm, 2 * nv, 2 * nv),
            }
        })
    }
}

fn monitors_for(measure: Measure) -> Vec<Monitor> {
    match measure {
        Measure::Gme | Measure::Bures => vec![Monitor::Fidelity],
        Measure::TraceDistance => vec![Monitor::Fidelity, Monitor::TraceDistance],
        Measure::Ree => vec![Monitor::Fidelity, Monitor::Qre],
    }
}

/// The figure of merit of one run; smaller is better except for GME.
fn run_value(measure: Measure, r: &TrainReport) -> f64 {
    match measure {
        Measure::Gme => r.best_fidelity.value,
        Measure::Bures => (1.0 - r.best_fidelity.value * r.best_fidelity.value).max(0.0),
        Measure::TraceDistance => r.best_trace_distance.map_or(f64::INFINITY, |b| b.value),
        Measure::Ree => r.best_qre.map_or(f64::INFINITY, |b| b.value.max(0.0)),
    }
}

fn better(measure: Measure, a: f64, b: f64) -> bool {
    match measure {
        Measure::Gme => a > b,
        _ => a < b,
    }
}

/// Picks the best run; ties go to the earlier seed so the result does not
/// depend on completion order.
fn select(measure: Measure, reports: Vec<TrainReport>) -> Option<TrainReport> {
    reports.into_iter().reduce(|best, r| {
        if better(measure, run_value(measure, &r), run_value(measure, &best)) {
            r
        } else {
            best
        }
    })
}

fn estimate(measure: Measure, partition: &PartitionSet, target: &Target, best: TrainReport, restarts: usize) -> Result<MeasureEstimate> {
    let value = run_value(measure, &best);
    estimate_with(measure, partition, target, best, restarts, value)
}

fn estimate_with(
    measure: Measure,
    partition: &PartitionSet,
    target: &Target,
    best: TrainReport,
    restarts: usize,
    value: f64,
) -> Result<MeasureEstimate> {
    if measure == Measure::Ree && value.is_infinite() {
        return Err(Error::InfiniteQre);
    }
    let rank_deficient_target = target.density().spectrum()?.min() <= 0.0;
    Ok(MeasureEstimate {
        measure,
        partition: partition.to_string(),
        value,
        bound: if measure == Measure::Gme { BoundKind::LowerBound } else { BoundKind::UpperBound },
        restarts,
        best_seed: best.seed,
        trace_id: format!("{measure}/{partition}/{}", best.seed),
        converged: best.stop != StopReason::MaxIters,
        iterations: best.iterations,
        clipped: best.max_clipped,
        rank_deficient_target,
        carried_from: None,
        threshold_hits: usize::from(best.reached_threshold),
        best,
    })
}

/// Runs every restart of one constrained optimisation, in parallel.
fn optimise(
    measure: Measure,
    target: &Target,
    partition: &PartitionSet,
    spec: LearnerSpec,
    config: &LearnConfig,
) -> Result<MeasureEstimate> {
    let restarts = config.restarts.max(1);
    let mut learn = config.clone();
    learn.monitor = monitors_for(measure);
    let reports = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let seed = config.seed.wrapping_add(r as u64);
            let ansatz = spec.build(target.density().dims(), Some(partition), seed)?;
            train(ansatz, target, &LearnConfig { seed, ..learn.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    let hits = reports.iter().filter(|r| r.reached_threshold).count();
    let best = select(measure, reports).expect("at least one restart");
    let mut e = estimate(measure, partition, target, best, restarts)?;
    e.threshold_hits = hits;
    Ok(e)
}

/// Geometric measure: best fidelity of a pure `partition`-separable learner
/// with a pure target.
pub fn gme(target: &Target, partition: &PartitionSet, config: &MeasureConfig) -> Result<MeasureEstimate> {
    if !target.is_pure() {
        return Err(Error::BadParam { name: "target", value: f64::NAN, reason: "GME needs a pure target" });
    }
    let spec = config.spec_for(target, Measure::Gme);
    if spec.kind.is_mixed() {
        return Err(Error::BadParam { name: "learner", value: f64::NAN, reason: "GME needs a pure learner" });
    }
    optimise(Measure::Gme, target, partition, spec, &config.learn)
}

pub fn distance_measure(
    target: &Target,
    partition: &PartitionSet,
    metric: Metric,
    config: &MeasureConfig,
) -> Result<MeasureEstimate> {
    let measure = match metric {
        Metric::Trace => Measure::TraceDistance,
        Metric::Bures => Measure::Bures,
    };
    optimise(measure, target, partition, config.spec_for(target, measure), &config.learn)
}

/// Minimum relative entropy `S(target || learner)` over every monitored
/// point of every restart.
pub fn ree_upper(target: &Target, partition: &PartitionSet, config: &MeasureConfig) -> Result<MeasureEstimate> {
    optimise(Measure::Ree, target, partition, config.spec_for(target, Measure::Ree), &config.learn)
}

/// Minimum over a family of partitions, each optimised independently.
pub fn ree_family(target: &Target, family: &[PartitionSet], config: &MeasureConfig) -> Result<MeasureEstimate> {
    let runs = family.iter().map(|k| ree_upper(target, k, config)).collect::<Result<Vec<_>>>()?;
    let restarts = runs.iter().map(|e| e.restarts).sum();
    let mut best = runs
        .into_iter()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .ok_or(Error::InvalidPartition("empty partition family".into()))?;
    best.restarts = restarts;
    Ok(best)
}

/// Fully separable, bi-separable and GHZ-type REE bounds of a three-qudit state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReeVariants {
    pub full: MeasureEstimate,
    pub gen: MeasureEstimate,
    pub w: MeasureEstimate,
    /// Raw estimates broke `E_R >= E_R^Gen >= E_R^W` by more than [`ORDERING_SLACK`].
    pub ordering_violated: bool,
}

pub const ORDERING_SLACK: f64 = 1e-3;

/// Each family is a subset of the next, so a smaller bound for a coarser
/// family is also a bound for the finer one; the reported values are folded
/// to respect the ordering.
pub fn ree_variants(target: &Target, config: &MeasureConfig) -> Result<ReeVariants> {
    let dims = target.density().dims();
    if dims.len() != 3 {
        return Err(Error::DimMismatch { left: 3, right: dims.len() });
    }
    let full = ree_upper(target, &presets::fully_separable(), config)?;
    let mut gen = ree_family(target, &presets::bi_separable(), config)?;
    let mut w = ree_family(target, &presets::ghz(), config)?;
    let ordering_violated = gen.value > full.value + ORDERING_SLACK || w.value > gen.value + ORDERING_SLACK;
    if full.value < gen.value {
        gen.value = full.value;
    }
    if gen.value < w.value {
        w.value = gen.value;
    }
    Ok(ReeVariants { full, gen, w, ordering_violated })
}

/// Single-shot PLOB bound: REE of the Choi state across the `{1|2}` cut.
pub fn capacity_bound(channel: &ChannelSpec, config: &MeasureConfig) -> Result<MeasureEstimate> {
    let target = Target::from_density(choi(channel)?)?;
    ree_upper(&target, &PartitionSet::fully_separable(2), config)
}

/// Sweeps a family of targets. Each restart walks the whole family with
/// warm starts (when enabled); restarts run in parallel and every point keeps
/// its best restart.
pub fn measure_sweep(
    targets: &[Target],
    partition: &PartitionSet,
    measure: Measure,
    config: &MeasureConfig,
    warm_iters: Option<usize>,
) -> Result<Vec<MeasureEstimate>> {
    let restarts = config.learn.restarts.max(1);
    sweep_reports(targets, partition, measure, config, warm_iters)?
        .into_iter()
        .zip(targets)
        .map(|((best, hits), t)| {
            let mut e = estimate(measure, partition, t, best, restarts)?;
            e.threshold_hits = hits;
            Ok(e)
        })
        .collect()
}

/// Best report per target, with the number of restarts that reached the threshold.
fn sweep_reports(
    targets: &[Target],
    partition: &PartitionSet,
    measure: Measure,
    config: &MeasureConfig,
    warm_iters: Option<usize>,
) -> Result<Vec<(TrainReport, usize)>> {
    let Some(first) = targets.first() else {
        return Ok(Vec::new());
    };
    let spec = config.spec_for(first, measure);
    let restarts = config.learn.restarts.max(1);
    let mut learn = config.learn.clone();
    learn.monitor = monitors_for(measure);
    let per_restart = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let cfg = LearnConfig { seed: learn.seed.wrapping_add(r as u64), ..learn.clone() };
            match warm_iters {
                Some(w) => crate::learning::warm_start_sweep(targets, spec, Some(partition), &cfg, Some(w)),
                None => targets
                    .iter()
                    .map(|t| train(spec.build(t.density().dims(), Some(partition), cfg.seed)?, t, &cfg))
                    .collect(),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut columns: Vec<Vec<TrainReport>> = (0..targets.len()).map(|_| Vec::with_capacity(restarts)).collect();
    for run in per_restart {
        for (i, rep) in run.into_iter().enumerate() {
            columns[i].push(rep);
        }
    }
    Ok(columns
        .into_iter()
        .map(|reps| {
            let hits = reps.iter().filter(|r| r.reached_threshold).count();
            (select(measure, reps).expect("at least one restart"), hits)
        })
        .collect())
}

/// REE variants along the depolarised family `(1 - p) rho + p I / D`, with
/// `ps` ascending.
///
/// Every point also tries the best learner state of each earlier point and
/// of each finer family, mixed with white noise up to the current `p`. The
/// maximally mixed state is a product state, so the mixture stays in the
/// family and its relative entropy is a valid bound; this makes the bounds
/// non-increasing in `p`. `ordering_violated` refers to the raw runs.
pub fn ree_variants_sweep(
    base: &DensityMatrix,
    ps: &[f64],
    config: &MeasureConfig,
    warm_iters: Option<usize>,
) -> Result<Vec<ReeVariants>> {
    let dims = base.dims().to_vec();
    if dims.len() != 3 {
        return Err(Error::DimMismatch { left: 3, right: dims.len() });
    }
    if let Some(w) = ps.windows(2).find(|w| w[1] < w[0]) {
        return Err(Error::BadParam { name: "p", value: w[1], reason: "sweep must be ascending" });
    }
    let targets = ps
        .iter()
        .map(|&p| Target::from_density(depolarise(base, p)?))
        .collect::<Result<Vec<_>>>()?;
    let families = [vec![presets::fully_separable()], presets::bi_separable(), presets::ghz()];
    let restarts = config.learn.restarts.max(1);
    // runs[family][member][point]
    let runs = families
        .iter()
        .map(|fam| {
            fam.iter()
                .map(|k| Ok(sweep_reports(&targets, k, Measure::Ree, config, warm_iters)?.into_iter().map(|(r, _)| r).collect()))
                .collect::<Result<Vec<Vec<TrainReport>>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let states = runs
        .iter()
        .map(|fam| {
            fam.iter()
                .map(|reps| reps.iter().map(|r| best_qre_state(r, &dims)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let noise = DensityMatrix::maximally_mixed(dims.clone());

    let mut out = Vec::with_capacity(ps.len());
    for (i, target) in targets.iter().enumerate() {
        let raw: Vec<f64> =
            runs.iter().map(|fam| fam.iter().map(|reps| run_value(Measure::Ree, &reps[i])).fold(f64::INFINITY, f64::min)).collect();
        let ordering_violated = raw[1] > raw[0] + ORDERING_SLACK || raw[2] > raw[1] + ORDERING_SLACK;
        let mut best: Vec<MeasureEstimate> = Vec::with_capacity(3);
        for f in 0..families.len() {
            // (value, family, member, point)
            let mut pick = (f64::INFINITY, f, 0, i);
            for (g, fam_states) in states.iter().enumerate().take(f + 1) {
                for (m, member) in fam_states.iter().enumerate() {
                    for (j, state) in member.iter().enumerate().take(i + 1) {
                        let Some(tau) = state else { continue };
                        let value = if j == i {
                            run_value(Measure::Ree, &runs[g][m][j])
                        } else if ps[j] < 1.0 {
                            let lambda = (ps[i] - ps[j]) / (1.0 - ps[j]);
                            qre(target.density(), &tau.mix(&noise, 1.0 - lambda)?)?
                        } else {
                            continue;
                        };
                        if value < pick.0 {
                            pick = (value, g, m, j);
                        }
                    }
                }
            }
            let (value, g, m, j) = pick;
            let member_restarts = restarts * families[f].len();
            let mut e = estimate_with(Measure::Ree, &families[g][m], target, runs[g][m][j].clone(), member_restarts, value.max(0.0))?;
            e.carried_from = (j != i).then_some(ps[j]);
            best.push(e);
        }
        let w = best.pop().expect("three families");
        let gen = best.pop().expect("three families");
        let full = best.pop().expect("three families");
        out.push(ReeVariants { full, gen, w, ordering_violated });
    }
    Ok(out)
}

/// Projected learner state at the best monitored QRE point.
fn best_qre_state(report: &TrainReport, dims: &[usize]) -> Result<Option<DensityMatrix>> {
    let Some(doc) = &report.best_qre_params else {
        return Ok(None);
    };
    let raw = Ansatz::from_document(doc)?.raw_matrix()?;
    Ok(Some(DensityMatrix::project(&raw, dims.to_vec())?.0))
}

/// `sweep_param,measure,partition,value,restarts,converged`.
pub const SWEEP_CSV_HEADER: &str = "sweep_param,measure,partition,value,restarts,converged";

/// One CSV row per estimate.
pub fn write_sweep_csv<W: std::io::Write>(out: W, rows: &[(f64, &MeasureEstimate)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER.split(','))?;
    for (param, e) in rows {
        w.write_record([
            param.to_string(),
            e.measure.to_string(),
            e.partition.clone(),
            format!("{:e}", e.value),
            e.restarts.to_string(),
            e.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_names_serialise() {
        assert_eq!(serde_json::to_string(&Measure::TraceDistance).unwrap(), "\"E_C1\"");
        assert_eq!(serde_json::to_string(&BoundKind::UpperBound).unwrap(), "\"UPPER_BOUND\"");
        assert_eq!(Measure::Ree.to_string(), "E_R");
    }

    #[test]
    fn sweep_csv_quotes_partitions() {
        let target = Target::from_density(crate::states::werner(-0.5, 2).unwrap()).unwrap();
        let spec = LearnerSpec::new(crate::ansatz::AnsatzKind::ClassicalMixer, 0, 2);
        let ansatz = spec.build(&[2, 2], None, 0).unwrap();
        let cfg = LearnConfig { max_iters: 2, ..Default::default() };
        let report = train(ansatz, &target, &cfg).unwrap();
        let k = PartitionSet::fully_separable(2);
        let e = estimate(Measure::Gme, &k, &target, report, 1).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[(0.5, &e)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_CSV_HEADER);
        assert!(lines.next().unwrap().starts_with("0.5,GME,1|2,"));
    }
}

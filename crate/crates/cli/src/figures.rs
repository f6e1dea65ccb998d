//! Presets reproducing the reference experiments. Each figure has a typed
//! result function and a driver that writes CSV, JSON and SVG artifacts.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use snns_core::ansatz::AnsatzKind;
use snns_core::learning::{classify_with, LearnerSpec, Optimizer, Target, Verdict};
use snns_core::measures::{capacity_bound, distance_measure, ree_upper, ree_variants_sweep, Measure, MeasureEstimate, Metric, ReeVariants};
use snns_core::qmath::min_pt_eigenvalue;
use snns_core::separability::{presets, PartitionSet};
use snns_core::states::{self, ChannelKind, ChannelSpec};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::run::{measure_config, trace_plot, Outcome, Outputs};
use crate::svg::{series_from_csv, Plot};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Werner5,
    BoundEnt,
    Wghz,
    ReeVariants,
    Plob,
}

impl FromStr for Figure {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "werner5" => Figure::Werner5,
            "bound-ent" => Figure::BoundEnt,
            "wghz" => Figure::Wghz,
            "ree-variants" => Figure::ReeVariants,
            "plob" => Figure::Plob,
            other => return Err(CliError::Config(format!("unknown figure `{other}`"))),
        })
    }
}

/// Figure-specific switches that are not part of the experiment config.
#[derive(Clone, Debug, PartialEq)]
pub struct FigureOptions {
    pub alpha_steps: usize,
    pub channel: ChannelKind,
    /// Local dimension for `plob`; 2 for depolarising, 3 for Holevo-Werner when unset.
    pub d: Option<usize>,
    /// `w` or `ghz` for `ree-variants`.
    pub state: String,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions { alpha_steps: 5, channel: ChannelKind::Depolarising, d: None, state: "w".into() }
    }
}

/// Adam at lr 0.01 with the iteration cap as the plateau window.
fn adam(iters: usize, restarts: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { experiment: Experiment::Figure, ..Default::default() };
    cfg.learn.optimizer = Optimizer::Adam { beta1: 0.9, beta2: 0.999 };
    cfg.learn.learning_rate = 0.01;
    cfg.learn.max_iters = iters;
    cfg.learn.plateau_window = iters;
    cfg.learn.restarts = restarts;
    cfg
}

/// Default configuration of each figure; command-line flags override it.
pub fn preset(figure: Figure) -> ExperimentConfig {
    let mut cfg = match figure {
        Figure::Werner5 => ExperimentConfig {
            target: "werner:eta=-0.75,d=5".into(),
            ansatz: Some(AnsatzKind::MixedNdm),
            hidden: Some(10),
            mixing: Some(10),
            out: "figure-werner5".into(),
            ..adam(20_000, 5)
        },
        Figure::BoundEnt => ExperimentConfig {
            target: "bound_entangled:alpha=3.5".into(),
            ansatz: Some(AnsatzKind::MixedNdm),
            hidden: Some(12),
            mixing: Some(12),
            measure: Measure::TraceDistance,
            out: "figure-bound-ent".into(),
            ..adam(40_000, 5)
        },
        Figure::Wghz => {
            let mut c = ExperimentConfig { target: "w".into(), hidden: Some(6), out: "figure-wghz".into(), ..adam(20_000, 8) };
            // lr 0.01 leaves every W-type learner on the noisy W state at F ~ 0.979
            c.learn.learning_rate = 0.03;
            c
        }
        Figure::ReeVariants => {
            let mut c = ExperimentConfig { target: "w".into(), out: "figure-ree-variants".into(), ..adam(20_000, 3) };
            c.learn.plateau_window = 5000;
            c.sweep_param = "p".into();
            c.sweep_from = 0.0;
            c.sweep_to = 0.9;
            c.sweep_steps = 10;
            c
        }
        Figure::Plob => {
            let mut c = ExperimentConfig { target: "choi".into(), out: "figure-plob".into(), ..adam(20_000, 3) };
            c.learn.plateau_window = 5000;
            c.sweep_steps = 11;
            c
        }
    };
    cfg.figure = Some(
        match figure {
            Figure::Werner5 => "werner5",
            Figure::BoundEnt => "bound-ent",
            Figure::Wghz => "wghz",
            Figure::ReeVariants => "ree-variants",
            Figure::Plob => "plob",
        }
        .into(),
    );
    cfg
}

/// Relative entropy of the `d = 5` Werner state at `eta = -0.75` and its exact value.
pub fn werner5(cfg: &ExperimentConfig) -> Result<(MeasureEstimate, f64)> {
    let spec = cfg.target_spec()?;
    let target = spec.build()?;
    let estimate = ree_upper(&target, &PartitionSet::fully_separable(2), &measure_config(cfg, &target))?;
    let eta = spec.params.get("eta").copied().unwrap_or(-0.75);
    Ok((estimate, states::werner_ree(eta)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundEntPoint {
    pub alpha: f64,
    pub min_pt_eigenvalue: f64,
    pub free: MeasureEstimate,
    pub separable: MeasureEstimate,
}

/// `alpha_i = 3 + (i - 1/2) / steps`, the midpoints of `steps` equal cells of (3, 4].
pub fn alpha_grid(steps: usize) -> Vec<f64> {
    (1..=steps).map(|i| 3.0 + (i as f64 - 0.5) / steps as f64).collect()
}

/// Trace distance from each bound-entangled state to a free and a fully
/// separable learner.
pub fn bound_ent(cfg: &ExperimentConfig, steps: usize) -> Result<Vec<BoundEntPoint>> {
    let spec = cfg.target_spec()?;
    alpha_grid(steps)
        .into_par_iter()
        .map(|alpha| {
            let target = spec.with_param("alpha", alpha)?.build()?;
            let mc = measure_config(cfg, &target);
            let min_pt_eigenvalue = min_pt_eigenvalue(target.density(), 1)?;
            let free = distance_measure(&target, &PartitionSet::single_block(2), Metric::Trace, &mc)?;
            let separable = distance_measure(&target, &PartitionSet::fully_separable(2), Metric::Trace, &mc)?;
            Ok(BoundEntPoint { alpha, min_pt_eigenvalue, free, separable })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WghzRow {
    pub p: f64,
    pub state: String,
    pub partition: String,
    pub verdict: Verdict,
    pub free_fidelity: f64,
    pub masked_fidelity: f64,
    pub masked_restarts: usize,
    pub reached: bool,
}

/// GHZ-type and W-type learners on noisy GHZ and W states.
pub fn wghz(cfg: &ExperimentConfig) -> Result<Vec<WghzRow>> {
    let masks = [("ghz", presets::ghz()[0].clone()), ("w", presets::w())];
    let mut jobs = Vec::new();
    for p in [0.0, 1.0 / 3.0] {
        for state in ["ghz", "w"] {
            for (label, k) in &masks {
                jobs.push((p, state, *label, k.clone()));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(p, state, label, k)| {
            let target = format!("{state}:p={p}").parse::<crate::config::TargetSpec>()?.build()?;
            let spec = learner(cfg, &target);
            let c = classify_with(&target, &k, spec, spec, &cfg.learn)?;
            Ok(WghzRow {
                p,
                state: state.into(),
                partition: format!("{label} {k}"),
                verdict: c.verdict,
                free_fidelity: c.free.best_fidelity.value,
                masked_fidelity: c.masked.best_fidelity.value,
                masked_restarts: c.masked_restarts,
                reached: c.masked.reached_threshold,
            })
        })
        .collect()
}

/// Pure learner for pure targets, NDM otherwise, widths from the config.
fn learner(cfg: &ExperimentConfig, target: &Target) -> LearnerSpec {
    let n = cfg.hidden.unwrap_or(6);
    if target.is_pure() {
        LearnerSpec::new(AnsatzKind::PureComplex, n, 0)
    } else {
        LearnerSpec::new(AnsatzKind::MixedNdm, n, cfg.mixing.unwrap_or(n))
    }
}

/// REE variants along the depolarised W (or GHZ) family.
pub fn ree_variants(cfg: &ExperimentConfig, state: &str) -> Result<Vec<(f64, ReeVariants)>> {
    let base = match state {
        "w" => states::w_state(),
        "ghz" => states::ghz(2, 3),
        other => return Err(CliError::Config(format!("ree-variants needs state `w` or `ghz`, not `{other}`"))),
    };
    let ps = cfg.sweep_values()?;
    let target = Target::from_density(base.clone())?;
    let v = ree_variants_sweep(&base, &ps, &measure_config(cfg, &target), cfg.warm_iters)?;
    Ok(ps.into_iter().zip(v).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlobPoint {
    pub param: f64,
    pub estimate: MeasureEstimate,
    pub exact: f64,
}

/// `n` evenly spaced channel parameters: `p` in [0, 1] for depolarising,
/// `eta` in [-1, 0] for Holevo-Werner.
pub fn plob_grid(kind: ChannelKind, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let (lo, hi) = match kind {
        ChannelKind::HolevoWerner => (-1.0, 0.0),
        _ => (0.0, 1.0),
    };
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Single-shot PLOB bounds over the given channel parameters.
pub fn plob(cfg: &ExperimentConfig, kind: ChannelKind, d: usize, grid: &[f64]) -> Result<Vec<PlobPoint>> {
    grid.iter()
        .copied()
        .map(|param| {
            let channel = ChannelSpec::new(kind, d, param)?;
            let target = Target::from_density(states::choi(&channel)?)?;
            let estimate = capacity_bound(&channel, &measure_config(cfg, &target))?;
            Ok(PlobPoint { param, estimate, exact: channel.exact_bound()? })
        })
        .collect()
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

pub fn run_figure(figure: Figure, cfg: &ExperimentConfig, opts: &FigureOptions) -> Result<Outcome> {
    let out = Outputs::new(&cfg.out, cfg.plot)?;
    match figure {
        Figure::Werner5 => {
            let (e, exact) = werner5(cfg)?;
            out.json("run.json", &e)?;
            let csv = out.series("series.csv", &e.best)?;
            out.plot("plot.svg", &trace_plot(&csv, "Werner d = 5, fully separable learner")?)?;
            println!("E_R estimate {:.7} vs exact {exact:.7} (difference {:.2e}, best seed {})", e.value, e.value - exact, e.best_seed);
        }
        Figure::BoundEnt => {
            let points = bound_ent(cfg, opts.alpha_steps)?;
            out.summary_json("run.json", &points)?;
            let mut rows: Vec<(f64, &MeasureEstimate)> = Vec::new();
            for p in &points {
                rows.push((p.alpha, &p.free));
                rows.push((p.alpha, &p.separable));
            }
            let csv = out.sweep("sweep.csv", &rows)?;
            let table: Vec<Vec<String>> = points
                .iter()
                .map(|p| {
                    vec![
                        fmt(p.alpha),
                        fmt(p.min_pt_eigenvalue),
                        fmt(p.free.value),
                        fmt(p.separable.value),
                        fmt(p.separable.best.best_fidelity.value),
                        p.separable.threshold_hits.to_string(),
                    ]
                })
                .collect();
            out.table(
                "bound_ent.csv",
                &["alpha", "min_pt_eigenvalue", "free_trace_distance", "separable_trace_distance", "separable_fidelity", "separable_threshold_hits"],
                &table,
            )?;
            let plot = Plot {
                title: "Trace distance to the bound-entangled states".into(),
                x_label: "alpha".into(),
                y_label: "trace distance".into(),
                log_y: true,
                series: series_from_csv(&csv, "sweep_param", "value", Some("partition"))?,
            };
            out.plot("plot.svg", &plot)?;
            for p in &points {
                println!(
                    "alpha {:.3}: min PT eigenvalue {:.3e}, free {:.3e}, separable {:.3e} ({} of {} restarts reached the threshold)",
                    p.alpha, p.min_pt_eigenvalue, p.free.value, p.separable.value, p.separable.threshold_hits, p.separable.restarts
                );
            }
        }
        Figure::Wghz => {
            let rows = wghz(cfg)?;
            out.summary_json("run.json", &rows)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fmt(r.p),
                        r.state.clone(),
                        r.partition.clone(),
                        format!("{:?}", r.verdict),
                        fmt(r.free_fidelity),
                        fmt(r.masked_fidelity),
                        r.masked_restarts.to_string(),
                    ]
                })
                .collect();
            let csv = out.table("wghz.csv", &["p", "state", "partition", "verdict", "free_fidelity", "masked_fidelity", "masked_restarts"], &table)?;
            let mut series = series_from_csv(&csv, "p", "masked_fidelity", Some("partition"))?;
            series.iter_mut().for_each(|s| s.markers = true);
            out.plot("plot.svg", &Plot { title: "Restricted learner fidelity".into(), x_label: "p".into(), y_label: "fidelity".into(), log_y: false, series })?;
            for r in &rows {
                println!("p {:.3} {:>3} with {}: fidelity {:.6} ({:?})", r.p, r.state, r.partition, r.masked_fidelity, r.verdict);
            }
        }
        Figure::ReeVariants => {
            let points = ree_variants(cfg, &opts.state)?;
            out.summary_json("run.json", &points)?;
            let mut table = Vec::new();
            for (p, v) in &points {
                for (name, e) in [("E_R", &v.full), ("E_R^Gen", &v.gen), ("E_R^W", &v.w)] {
                    table.push(vec![
                        fmt(*p),
                        name.to_string(),
                        fmt(e.value),
                        e.partition.clone(),
                        e.carried_from.map(fmt).unwrap_or_default(),
                        v.ordering_violated.to_string(),
                    ]);
                }
            }
            let csv = out.table("ree_variants.csv", &["p", "variant", "value", "partition", "carried_from", "raw_ordering_violated"], &table)?;
            let plot = Plot {
                title: format!("REE variants of the depolarised {} state", opts.state.to_uppercase()),
                x_label: "p".into(),
                y_label: "E_R (bits)".into(),
                log_y: false,
                series: series_from_csv(&csv, "p", "value", Some("variant"))?,
            };
            out.plot("plot.svg", &plot)?;
            for (p, v) in &points {
                println!("p {p:.2}: E_R {:.6}  E_R^Gen {:.6}  E_R^W {:.6}", v.full.value, v.gen.value, v.w.value);
            }
        }
        Figure::Plob => {
            let d = opts.d.unwrap_or(if opts.channel == ChannelKind::HolevoWerner { 3 } else { 2 });
            let points = plob(cfg, opts.channel, d, &plob_grid(opts.channel, cfg.sweep_steps))?;
            out.summary_json("run.json", &points)?;
            let rows: Vec<(f64, &MeasureEstimate)> = points.iter().map(|p| (p.param, &p.estimate)).collect();
            let csv = out.sweep("sweep.csv", &rows)?;
            let exact: Vec<Vec<String>> = points.iter().map(|p| vec![fmt(p.param), fmt(p.exact)]).collect();
            let exact_csv = out.table("exact.csv", &["sweep_param", "exact"], &exact)?;
            let mut series = series_from_csv(&exact_csv, "sweep_param", "exact", None)?;
            let mut est = series_from_csv(&csv, "sweep_param", "value", None)?;
            est.iter_mut().for_each(|s| {
                s.markers = true;
                s.name = "SNNS".into();
            });
            series.extend(est);
            let param = if opts.channel == ChannelKind::HolevoWerner { "eta" } else { "p" };
            out.plot("plot.svg", &Plot { title: format!("Single-shot capacity bound, d = {d}"), x_label: param.into(), y_label: "bits".into(), log_y: false, series })?;
            for p in &points {
                println!("{param} {:.3}: bound {:.6}, exact {:.6}", p.param, p.estimate.value, p.exact);
            }
        }
    }
    println!("wrote {}", out.dir.display());
    Ok(Outcome::Done)
}


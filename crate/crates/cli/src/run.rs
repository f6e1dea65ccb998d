//! The `learn`, `classify`, `measure` and `sweep` experiments.

use std::path::{Path, PathBuf};

use serde::Serialize;
use snns_core::learning::{classify_with, train, Target, TrainReport, Verdict};
use snns_core::measures::{distance_measure, gme, measure_sweep, ree_upper, write_sweep_csv, Measure, MeasureConfig, MeasureEstimate, Metric};
use snns_core::separability::PartitionSet;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::svg::{series_from_csv, Plot, Series};

/// How a successful run ended; errors map to exit code 1 separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Inconclusive,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Done => 0,
            Outcome::Inconclusive => 2,
        }
    }
}

fn strip_series(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            if map.contains_key("final_loss") {
                map.remove("series");
            }
            map.values_mut().for_each(strip_series);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_series),
        _ => {}
    }
}

/// Artifact directory.
pub struct Outputs {
    pub dir: PathBuf,
    pub plot: bool,
}

impl Outputs {
    pub fn new(dir: &Path, plot: bool) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Outputs { dir: dir.to_path_buf(), plot })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// Like [`Outputs::json`] but drops per-iteration series from embedded
    /// training reports; used where one file covers many runs.
    pub fn summary_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut v = serde_json::to_value(value)?;
        strip_series(&mut v);
        self.json(name, &v)
    }

    pub fn series(&self, name: &str, report: &TrainReport) -> Result<PathBuf> {
        let path = self.path(name);
        let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        report.write_series_csv(std::io::BufWriter::new(file)).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn sweep(&self, name: &str, rows: &[(f64, &MeasureEstimate)]) -> Result<PathBuf> {
        let path = self.path(name);
        let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write_sweep_csv(file, rows)?;
        Ok(path)
    }

    /// Writes a plain CSV table.
    pub fn table(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn plot(&self, name: &str, plot: &Plot) -> Result<()> {
        if self.plot {
            plot.write(&self.path(name))?;
        }
        Ok(())
    }
}

/// Monitored quantities of a training trace against the iteration.
pub fn trace_plot(csv: &Path, title: &str) -> Result<Plot> {
    let mut series: Vec<Series> = Vec::new();
    for col in ["fidelity", "qre", "trace_distance"] {
        series.extend(series_from_csv(csv, "iter", col, None)?.into_iter().filter(|s| !s.points.is_empty()));
    }
    Ok(Plot { title: title.into(), x_label: "iteration".into(), y_label: "value".into(), log_y: false, series })
}

/// Loss against the iteration on a log axis.
pub fn loss_plot(csv: &Path, title: &str) -> Result<Plot> {
    let series = series_from_csv(csv, "iter", "loss", None)?;
    Ok(Plot { title: title.into(), x_label: "iteration".into(), y_label: "loss".into(), log_y: true, series })
}

fn single(parts: Vec<PartitionSet>, what: &str) -> Result<PartitionSet> {
    match <[PartitionSet; 1]>::try_from(parts) {
        Ok([k]) => Ok(k),
        Err(_) => Err(CliError::Config(format!("{what} takes a single partition, not a family"))),
    }
}

fn parties(target: &Target) -> usize {
    target.density().dims().len()
}

pub fn measure_config(cfg: &ExperimentConfig, target: &Target) -> MeasureConfig {
    let mut learn = cfg.learn.clone();
    learn.stop_at_threshold = false;
    MeasureConfig { learn, learner: cfg.learner_for(target) }
}

pub fn learn(cfg: &ExperimentConfig) -> Result<Outcome> {
    let target = cfg.target_spec()?.build()?;
    let k = single(cfg.partitions(parties(&target))?, "learn")?;
    let spec = cfg.learner_or_default(&target);
    let ansatz = spec.build(target.density().dims(), Some(&k), cfg.learn.seed)?;
    let report = train(ansatz, &target, &cfg.learn)?;
    let out = Outputs::new(&cfg.out, cfg.plot)?;
    out.json("run.json", &report)?;
    let csv = out.series("series.csv", &report)?;
    out.plot("plot.svg", &trace_plot(&csv, &format!("{} learner on {}", k, cfg.target))?)?;
    out.plot("loss.svg", &loss_plot(&csv, "loss")?)?;
    println!(
        "best fidelity {:.8} (threshold {}) after {} iterations, stop: {:?}",
        report.best_fidelity.value, report.threshold, report.iterations, report.stop
    );
    if let Some(q) = report.best_qre {
        println!("best QRE {:.8} bits", q.value);
    }
    println!("wrote {}", out.dir.display());
    Ok(Outcome::Done)
}

pub fn classify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let target = cfg.target_spec()?.build()?;
    let k = single(cfg.partitions(parties(&target))?, "classify")?;
    let spec = cfg.learner_or_default(&target);
    let c = classify_with(&target, &k, spec, spec, &cfg.learn)?;
    let out = Outputs::new(&cfg.out, cfg.plot)?;
    out.json("run.json", &c)?;
    out.series("series_free.csv", &c.free)?;
    let csv = out.series("series.csv", &c.masked)?;
    out.plot("plot.svg", &trace_plot(&csv, &format!("{k} learner on {}", cfg.target))?)?;
    println!(
        "{:?}: free fidelity {:.8}, {} fidelity {:.8} ({} restarts), margin {:.3e}",
        c.verdict, c.free.best_fidelity.value, c.partition, c.masked.best_fidelity.value, c.masked_restarts, c.margin
    );
    Ok(if c.verdict == Verdict::Inconclusive { Outcome::Inconclusive } else { Outcome::Done })
}

/// One measure against one partition.
pub fn measure_one(target: &Target, k: &PartitionSet, measure: Measure, mc: &MeasureConfig) -> Result<MeasureEstimate> {
    Ok(match measure {
        Measure::Gme => gme(target, k, mc)?,
        Measure::TraceDistance => distance_measure(target, k, Metric::Trace, mc)?,
        Measure::Bures => distance_measure(target, k, Metric::Bures, mc)?,
        Measure::Ree => ree_upper(target, k, mc)?,
    })
}

/// Best estimate over the members of a family: largest for GME, smallest otherwise.
pub fn best_of(measure: Measure, estimates: Vec<MeasureEstimate>) -> Option<MeasureEstimate> {
    let restarts = estimates.iter().map(|e| e.restarts).sum();
    let mut best = estimates.into_iter().reduce(|a, b| {
        let better = if measure == Measure::Gme { b.value > a.value } else { b.value < a.value };
        if better {
            b
        } else {
            a
        }
    })?;
    best.restarts = restarts;
    Some(best)
}

pub fn measure(cfg: &ExperimentConfig) -> Result<Outcome> {
    let target = cfg.target_spec()?.build()?;
    let mc = measure_config(cfg, &target);
    let estimates = cfg
        .partitions(parties(&target))?
        .iter()
        .map(|k| measure_one(&target, k, cfg.measure, &mc))
        .collect::<Result<Vec<_>>>()?;
    let e = best_of(cfg.measure, estimates).expect("at least one partition");
    let out = Outputs::new(&cfg.out, cfg.plot)?;
    out.json("run.json", &e)?;
    let csv = out.series("series.csv", &e.best)?;
    out.plot("plot.svg", &trace_plot(&csv, &format!("{} of {}", e.measure, cfg.target))?)?;
    let kind = if e.measure == Measure::Gme { "lower" } else { "upper" };
    println!("{} = {:.8} ({kind} bound, partition {}, best seed {})", e.measure, e.value, e.partition, e.best_seed);
    Ok(Outcome::Done)
}

/// Sweep values with the best estimate over the partition family at each.
pub fn sweep_estimates(cfg: &ExperimentConfig) -> Result<Vec<(f64, MeasureEstimate)>> {
    let spec = cfg.target_spec()?;
    let values = cfg.sweep_values()?;
    let targets = values
        .iter()
        .map(|&v| spec.with_param(&cfg.sweep_param, v)?.build())
        .collect::<Result<Vec<_>>>()?;
    let first = &targets[0];
    let mc = measure_config(cfg, first);
    let per_member = cfg
        .partitions(parties(first))?
        .iter()
        .map(|k| Ok(measure_sweep(&targets, k, cfg.measure, &mc, cfg.warm_iters)?))
        .collect::<Result<Vec<Vec<MeasureEstimate>>>>()?;
    Ok((0..targets.len())
        .map(|i| {
            let e = best_of(cfg.measure, per_member.iter().map(|m| m[i].clone()).collect()).expect("at least one partition");
            (values[i], e)
        })
        .collect())
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.target_spec()?;
    let points = sweep_estimates(cfg)?;
    let estimates: Vec<&MeasureEstimate> = points.iter().map(|(_, e)| e).collect();
    let out = Outputs::new(&cfg.out, cfg.plot)?;
    out.summary_json("run.json", &estimates)?;
    let rows: Vec<(f64, &MeasureEstimate)> = points.iter().map(|(v, e)| (*v, e)).collect();
    let csv = out.sweep("sweep.csv", &rows)?;
    let plot = Plot {
        title: format!("{} sweep of {}", cfg.measure, spec),
        x_label: cfg.sweep_param.clone(),
        y_label: cfg.measure.to_string(),
        log_y: false,
        series: series_from_csv(&csv, "sweep_param", "value", Some("measure"))?,
    };
    out.plot("plot.svg", &plot)?;
    for (v, e) in &rows {
        println!("{} = {v:.4}: {} = {:.8} ({})", cfg.sweep_param, e.measure, e.value, e.partition);
    }
    Ok(Outcome::Done)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.experiment {
        Experiment::Learn => learn(cfg),
        Experiment::Classify => classify(cfg),
        Experiment::Measure => measure(cfg),
        Experiment::Sweep => sweep(cfg),
        Experiment::Figure => {
            let name = cfg.figure.as_deref().ok_or_else(|| CliError::Config("experiment `figure` needs `figure`".into()))?;
            crate::figures::run_figure(name.parse()?, cfg, &crate::figures::FigureOptions::default())
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use snns_cli::config::{parse_channel, ExperimentConfig};
use snns_cli::figures::{self, Figure, FigureOptions};
use snns_cli::run::{self, Outcome};
use snns_cli::svg::{series_from_csv, Plot};
use snns_cli::{CliError, Experiment, Result};

#[derive(Parser)]
#[command(name = "snns", version, about = "Separable neural-network quantum states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one learner on a target.
    Learn(Common),
    /// Decide whether a target is reconstructible under a partition.
    Classify(Common),
    /// Estimate an entanglement measure.
    Measure(Common),
    /// Estimate a measure along a one-parameter target family.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Target parameter to vary.
        #[arg(long)]
        param: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Warm-start each point from the previous one with this iteration budget.
        #[arg(long)]
        warm_iters: Option<usize>,
    },
    /// Reproduce one of the reference figures.
    Figure {
        /// werner5, bound-ent, wghz, ree-variants or plob.
        name: String,
        #[command(flatten)]
        common: Common,
        /// Number of alpha values in (3, 4] for bound-ent.
        #[arg(long, default_value_t = 5)]
        alpha_steps: usize,
        /// depolarising or holevo-werner, for plob.
        #[arg(long, default_value = "depolarising")]
        channel: String,
        /// w or ghz, for ree-variants.
        #[arg(long, default_value = "w")]
        state: String,
    },
    /// Render an SVG line plot from CSV columns.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Column whose values split the rows into series.
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        log_y: bool,
        #[arg(long, default_value = "")]
        title: String,
        #[arg(long)]
        svg: PathBuf,
    },
    /// Print the default experiment config.
    Defaults,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target, e.g. `werner:eta=-0.75,d=5`, `w:p=0.3` or `file:rho.json`.
    #[arg(long)]
    target: Option<String>,
    /// Blocks such as `1,2|3`, a family (`fs`, `bs`, `ghz`, `w`) or `free`.
    #[arg(long)]
    partition: Option<String>,
    #[arg(long, conflicts_with = "nondisjoint")]
    disjoint: bool,
    #[arg(long)]
    nondisjoint: bool,
    /// Local dimension of the target (or channel, for plob).
    #[arg(long)]
    d: Option<usize>,
    /// pure_complex, amp_phase, mixed_ndm, vec_mixed or classical_mixer.
    #[arg(long)]
    ansatz: Option<String>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    mixing: Option<usize>,
    /// GME, E_C1, E_B or E_R.
    #[arg(long)]
    measure: Option<String>,
    /// gd or adam.
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, env = "SNNS_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Worker threads; results are ordered by sweep key regardless.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip SVG output.
    #[arg(long)]
    no_plot: bool,
}

fn from_name<T: serde::de::DeserializeOwned>(what: &str, name: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| CliError::Config(format!("unknown {what} `{name}`")))
}

impl Common {
    fn apply(&self, mut cfg: ExperimentConfig, local_dim_in_target: bool) -> Result<ExperimentConfig> {
        if let Some(t) = &self.target {
            cfg.target = t.clone();
        }
        if let (Some(d), true) = (self.d, local_dim_in_target) {
            cfg.target = cfg.target_spec()?.with_param("d", d as f64)?.to_string();
        }
        if let Some(p) = &self.partition {
            cfg.partition = p.clone();
        }
        if self.nondisjoint {
            cfg.nondisjoint = true;
        }
        if self.disjoint {
            cfg.nondisjoint = false;
        }
        if let Some(a) = &self.ansatz {
            cfg.ansatz = Some(from_name("ansatz", a)?);
        }
        cfg.hidden = self.hidden.or(cfg.hidden);
        cfg.mixing = self.mixing.or(cfg.mixing);
        if let Some(m) = &self.measure {
            cfg.measure = from_name("measure", m)?;
        }
        if let Some(o) = &self.optimizer {
            cfg.learn.optimizer = match o.to_ascii_lowercase().as_str() {
                "gd" => snns_core::learning::Optimizer::Gd,
                "adam" => snns_core::learning::Optimizer::Adam { beta1: 0.9, beta2: 0.999 },
                other => return Err(CliError::Config(format!("unknown optimizer `{other}`"))),
            };
        }
        if let Some(lr) = self.lr {
            cfg.learn.learning_rate = lr;
        }
        if let Some(n) = self.iters {
            if cfg.learn.plateau_window == cfg.learn.max_iters {
                cfg.learn.plateau_window = n;
            }
            cfg.learn.max_iters = n;
        }
        if let Some(eps) = self.eps {
            cfg.learn.epsilon = eps;
        }
        if let Some(seed) = self.seed {
            cfg.learn.seed = seed;
        }
        if let Some(r) = self.restarts {
            cfg.learn.restarts = r;
        }
        cfg.jobs = self.jobs.or(cfg.jobs);
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if self.no_plot {
            cfg.plot = false;
        }
        cfg.learn.validate()?;
        Ok(cfg)
    }

    fn load(&self, experiment: Experiment) -> Result<ExperimentConfig> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig { experiment, ..Default::default() },
        };
        self.apply(ExperimentConfig { experiment, ..base }, true)
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(f),
        None => f(),
    }
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Learn(c) => {
            let cfg = c.load(Experiment::Learn)?;
            with_jobs(cfg.jobs, || run::learn(&cfg))
        }
        Command::Classify(c) => {
            let cfg = c.load(Experiment::Classify)?;
            with_jobs(cfg.jobs, || run::classify(&cfg))
        }
        Command::Measure(c) => {
            let cfg = c.load(Experiment::Measure)?;
            with_jobs(cfg.jobs, || run::measure(&cfg))
        }
        Command::Sweep { common, param, from, to, steps, warm_iters } => {
            let mut cfg = common.load(Experiment::Sweep)?;
            if let Some(p) = param {
                cfg.sweep_param = p;
            }
            cfg.sweep_from = from.unwrap_or(cfg.sweep_from);
            cfg.sweep_to = to.unwrap_or(cfg.sweep_to);
            cfg.sweep_steps = steps.unwrap_or(cfg.sweep_steps);
            cfg.warm_iters = warm_iters.or(cfg.warm_iters);
            with_jobs(cfg.jobs, || run::sweep(&cfg))
        }
        Command::Figure { name, common, alpha_steps, channel, state } => {
            let figure: Figure = name.parse()?;
            let base = match &common.config {
                Some(path) => ExperimentConfig::load(path)?,
                None => figures::preset(figure),
            };
            let cfg = common.apply(base, figure != Figure::Plob)?;
            let opts = FigureOptions { alpha_steps, channel: parse_channel(&channel)?, d: common.d, state: state.to_ascii_lowercase() };
            with_jobs(cfg.jobs, || figures::run_figure(figure, &cfg, &opts))
        }
        Command::Plot { csv, x, y, group, log_y, title, svg } => {
            let series = series_from_csv(&csv, &x, &y, group.as_deref())?;
            Plot { title, x_label: x, y_label: y, log_y, series }.write(&svg)?;
            Ok(Outcome::Done)
        }
        Command::Defaults => {
            println!("{}", serde_json::to_string_pretty(&ExperimentConfig::default())?);
            Ok(Outcome::Done)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

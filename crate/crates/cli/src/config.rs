//! Experiment configuration: a flat JSON object whose learning fields are
//! those of [`LearnConfig`]. `snns defaults` prints every key.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use snns_core::ansatz::AnsatzKind;
use snns_core::learning::{LearnConfig, LearnerSpec, Target};
use snns_core::measures::Measure;
use snns_core::qmath::DensityMatrix;
use snns_core::separability::{presets, PartitionMode, PartitionSet};
use snns_core::states::{self, ChannelKind, ChannelSpec};

use crate::error::{CliError, Result};
use crate::ingest::ingest_density_matrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    #[default]
    Learn,
    Classify,
    Measure,
    Sweep,
    Figure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// `name[:key=value,...]`, or `file:PATH` for a density-matrix JSON file.
    pub target: String,
    /// Explicit blocks (`1,2|3`), a family name (`fs`, `bs`, `ghz`, `w`) or `free`.
    pub partition: String,
    pub nondisjoint: bool,
    pub ansatz: Option<AnsatzKind>,
    pub hidden: Option<usize>,
    pub mixing: Option<usize>,
    pub measure: Measure,
    /// Target parameter varied by `sweep`.
    pub sweep_param: String,
    pub sweep_from: f64,
    pub sweep_to: f64,
    pub sweep_steps: usize,
    /// Iteration budget after the first sweep point; cold starts when absent.
    pub warm_iters: Option<usize>,
    /// Figure preset run by `experiment: figure`.
    pub figure: Option<String>,
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub plot: bool,
    #[serde(flatten)]
    pub learn: LearnConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::Learn,
            target: "bell".into(),
            partition: "fs".into(),
            nondisjoint: false,
            ansatz: None,
            hidden: None,
            mixing: None,
            measure: Measure::Ree,
            sweep_param: "eta".into(),
            sweep_from: -1.0,
            sweep_to: 0.0,
            sweep_steps: 11,
            warm_iters: None,
            figure: None,
            jobs: None,
            out: PathBuf::from("snns-out"),
            plot: true,
            learn: LearnConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Every key the schema accepts.
    pub fn known_keys() -> BTreeSet<String> {
        match serde_json::to_value(ExperimentConfig::default()) {
            Ok(serde_json::Value::Object(map)) => map.into_iter().map(|(k, _)| k).collect(),
            _ => unreachable!("config serialises to an object"),
        }
    }

    /// Parses config text; `source` names it in error messages.
    pub fn from_json(text: &str, source: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::parse(source, &e))?;
        let serde_json::Value::Object(map) = &value else {
            return Err(CliError::Parse { path: source.into(), line: 1, column: 1, message: "expected a JSON object".into() });
        };
        let known = Self::known_keys();
        if let Some(key) = map.keys().find(|k| !known.contains(*k)) {
            let (line, column) = locate(text, &format!("\"{key}\""));
            return Err(CliError::Parse { path: source.into(), line, column, message: format!("unknown field `{key}`") });
        }
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::parse(source, &e))?;
        config.learn.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn target_spec(&self) -> Result<TargetSpec> {
        self.target.parse()
    }

    pub fn mode(&self) -> PartitionMode {
        if self.nondisjoint {
            PartitionMode::NonDisjoint
        } else {
            PartitionMode::Disjoint
        }
    }

    /// The partitions named by `partition` for `n` parties.
    pub fn partitions(&self, n: usize) -> Result<Vec<PartitionSet>> {
        resolve_partition(&self.partition, n, self.mode())
    }

    /// A learner override when any of `ansatz`, `hidden` or `mixing` is set.
    pub fn learner_for(&self, target: &Target) -> Option<LearnerSpec> {
        if self.ansatz.is_none() && self.hidden.is_none() && self.mixing.is_none() {
            return None;
        }
        Some(self.learner_or_default(target))
    }

    pub fn learner_or_default(&self, target: &Target) -> LearnerSpec {
        let base = LearnerSpec::default_for(target);
        let kind = self.ansatz.unwrap_or(base.kind);
        let n_mixing = if kind.is_mixed() { self.mixing.unwrap_or(base.n_mixing.max(base.n_hidden)) } else { 0 };
        LearnerSpec::new(kind, self.hidden.unwrap_or(base.n_hidden), n_mixing)
    }

    /// Evenly spaced sweep values, endpoints included.
    pub fn sweep_values(&self) -> Result<Vec<f64>> {
        if self.sweep_steps == 0 {
            return Err(CliError::Config("sweep_steps must be at least 1".into()));
        }
        if self.sweep_steps == 1 {
            return Ok(vec![self.sweep_from]);
        }
        let h = (self.sweep_to - self.sweep_from) / (self.sweep_steps - 1) as f64;
        Ok((0..self.sweep_steps).map(|i| self.sweep_from + h * i as f64).collect())
    }
}

/// 1-based line and column of the first occurrence of `needle`.
fn locate(text: &str, needle: &str) -> (usize, usize) {
    let Some(pos) = text.find(needle) else {
        return (1, 1);
    };
    let before = &text[..pos];
    let line = before.matches('\n').count() + 1;
    let column = pos - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

pub fn resolve_partition(text: &str, n: usize, mode: PartitionMode) -> Result<Vec<PartitionSet>> {
    let t = text.trim();
    match t.to_ascii_lowercase().as_str() {
        "" | "fs" => return Ok(vec![PartitionSet::fully_separable(n)]),
        "free" | "none" => return Ok(vec![PartitionSet::single_block(n)]),
        _ => {}
    }
    if let Some(family) = presets::family(t) {
        if n != 3 {
            return Err(CliError::Config(format!("partition family `{t}` needs three parties, target has {n}")));
        }
        return Ok(family);
    }
    Ok(vec![PartitionSet::parse(t, n, mode)?])
}

/// A named state with parameters, e.g. `werner:eta=-0.75,d=5` or `w:p=0.2`.
/// Every named state takes an optional depolarising probability `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub path: Option<PathBuf>,
}

impl FromStr for TargetSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let name = name.trim().to_ascii_lowercase().replace('-', "_");
        if name == "file" {
            if rest.is_empty() {
                return Err(CliError::Config("`file:` needs a path".into()));
            }
            return Ok(TargetSpec { name, params: BTreeMap::new(), path: Some(PathBuf::from(rest)) });
        }
        let mut params = BTreeMap::new();
        for item in rest.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("target parameter `{item}` is not key=value")))?;
            let key = k.trim().to_string();
            let value = match (key.as_str(), v.trim()) {
                ("channel", c) => channel_code(c)?,
                (_, v) => v.parse().map_err(|_| CliError::Config(format!("target parameter `{key}` = `{v}` is not a number")))?,
            };
            params.insert(key, value);
        }
        let spec = TargetSpec { name, params, path: None };
        spec.check_keys()?;
        Ok(spec)
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.path {
            return write!(f, "file:{}", p.display());
        }
        f.write_str(&self.name)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            let sep = if i == 0 { ':' } else { ',' };
            if k == "channel" {
                write!(f, "{sep}{k}={}", CHANNELS[*v as usize].0)?;
            } else {
                write!(f, "{sep}{k}={v}")?;
            }
        }
        Ok(())
    }
}

const CHANNELS: [(&str, ChannelKind); 3] = [
    ("depolarising", ChannelKind::Depolarising),
    ("holevo_werner", ChannelKind::HolevoWerner),
    ("identity", ChannelKind::Identity),
];

fn channel_code(name: &str) -> Result<f64> {
    let name = name.to_ascii_lowercase().replace('-', "_");
    CHANNELS
        .iter()
        .position(|(n, _)| *n == name || (name == "hw" && *n == "holevo_werner"))
        .map(|i| i as f64)
        .ok_or_else(|| CliError::Config(format!("unknown channel `{name}`")))
}

pub fn parse_channel(name: &str) -> Result<ChannelKind> {
    Ok(CHANNELS[channel_code(name)? as usize].1)
}

impl TargetSpec {
    fn allowed(&self) -> Result<&'static [&'static str]> {
        Ok(match self.name.as_str() {
            "werner" => &["eta", "d", "p"],
            "bell" => &["d", "p"],
            "ghz" => &["d", "n", "p"],
            "w" => &["p"],
            "bound_entangled" => &["alpha", "p"],
            "choi" => &["channel", "d", "param", "p"],
            "file" => &["p"],
            other => return Err(CliError::Config(format!("unknown target `{other}`"))),
        })
    }

    fn check_keys(&self) -> Result<()> {
        let allowed = self.allowed()?;
        if let Some(k) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(CliError::Config(format!("target `{}` has no parameter `{k}` (expected one of {allowed:?})", self.name)));
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    fn need(&self, key: &str) -> Result<f64> {
        self.get(key).ok_or_else(|| CliError::Config(format!("target `{}` needs `{key}`", self.name)))
    }

    fn size(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) if v >= 1.0 && v.fract() == 0.0 => Ok(v as usize),
            Some(v) => Err(CliError::Config(format!("`{key}` = {v} is not a positive integer"))),
        }
    }

    /// The same target with one parameter replaced.
    pub fn with_param(&self, key: &str, value: f64) -> Result<TargetSpec> {
        let mut out = self.clone();
        out.params.insert(key.to_string(), value);
        out.check_keys()?;
        Ok(out)
    }

    pub fn density(&self) -> Result<DensityMatrix> {
        let rho = match self.name.as_str() {
            "file" => ingest_density_matrix(self.path.as_deref().expect("file targets carry a path"))?,
            "werner" => states::werner(self.need("eta")?, self.size("d", 2)?)?,
            "bell" => states::bell_state(self.size("d", 2)?),
            "ghz" => states::ghz(self.size("d", 2)?, self.size("n", 3)?),
            "w" => states::w_state(),
            "bound_entangled" => states::bound_entangled(self.need("alpha")?)?,
            "choi" => states::choi(&self.channel()?)?,
            other => return Err(CliError::Config(format!("unknown target `{other}`"))),
        };
        match self.get("p") {
            Some(p) => Ok(states::depolarise(&rho, p)?),
            None => Ok(rho),
        }
    }

    pub fn channel(&self) -> Result<ChannelSpec> {
        let kind = CHANNELS[self.get("channel").unwrap_or(0.0) as usize].1;
        Ok(ChannelSpec::new(kind, self.size("d", 2)?, self.get("param").unwrap_or(0.0))?)
    }

    /// Pure named states become pure targets so pure learners apply.
    pub fn build(&self) -> Result<Target> {
        let noiseless = self.get("p").is_none_or(|p| p == 0.0);
        let vector = match self.name.as_str() {
            "bell" if noiseless => Some(states::bell_vector(self.size("d", 2)?)),
            "ghz" if noiseless => Some(states::ghz_vector(self.size("d", 2)?, self.size("n", 3)?)),
            "w" if noiseless => Some(states::w_vector()),
            _ => None,
        };
        match vector {
            Some(psi) => {
                let rho = self.density()?;
                Ok(Target::pure(&psi, rho.dims().to_vec())?)
            }
            None => Ok(Target::from_density(self.density()?)?),
        }
    }
}

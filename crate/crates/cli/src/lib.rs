//! Experiment runner for separable neural-network quantum states: config
//! files, density-matrix ingestion, figure presets and SVG plots.

pub mod config;
pub mod error;
pub mod figures;
pub mod ingest;
pub mod run;
pub mod svg;

pub use config::{Experiment, ExperimentConfig, TargetSpec};
pub use error::{CliError, Result};
pub use ingest::{export_density_matrix, ingest_density_matrix};
pub use run::Outcome;

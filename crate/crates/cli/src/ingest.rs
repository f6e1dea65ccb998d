//! Density matrices as JSON: `{"dims": [..], "re": [..], "im": [..]}`, row-major.

use std::path::Path;

use serde::{Deserialize, Serialize};
use snns_core::qmath::{ComplexMatrix, DensityMatrix};
use snns_core::C64;

use crate::error::{CliError, Result};

/// Largest accepted `|Tr rho - 1|` in a file.
pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dims: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixFile {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let n = m.dim();
        let entries: Vec<C64> = (0..n).flat_map(|i| (0..n).map(move |j| m[(i, j)])).collect();
        MatrixFile {
            dims: rho.dims().to_vec(),
            re: entries.iter().map(|z| z.re).collect(),
            im: entries.iter().map(|z| z.im).collect(),
        }
    }

    /// Validates the entry count and every density-matrix invariant.
    pub fn into_density(self, source: &str) -> Result<DensityMatrix> {
        let n: usize = self.dims.iter().product();
        for (name, len) in [("re", self.re.len()), ("im", self.im.len())] {
            if len != n * n {
                return Err(CliError::Config(format!("{source}: `{name}` has {len} entries, dims {:?} need {}", self.dims, n * n)));
            }
        }
        let m = ComplexMatrix::from_fn(n, |i, j| C64::new(self.re[i * n + j], self.im[i * n + j]));
        DensityMatrix::with_tolerances(m, self.dims, TRACE_TOL, HERMITIAN_TOL).map_err(|e| match e {
            snns_core::Error::InvariantViolation { invariant, detail } => {
                CliError::InvariantViolation { path: source.to_string(), invariant, detail }
            }
            other => CliError::Core(other),
        })
    }
}

/// Reads and validates a density-matrix file.
pub fn ingest_density_matrix(path: &Path) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let source = path.display().to_string();
    let file: MatrixFile = serde_json::from_str(&text).map_err(|e| CliError::parse(source.clone(), &e))?;
    file.into_density(&source)
}

pub fn export_density_matrix(rho: &DensityMatrix, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&MatrixFile::from_density(rho))?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

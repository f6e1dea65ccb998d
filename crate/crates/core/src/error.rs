use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("matrix has eigenvalue {min:e} below the admissible floor")]
    NegativeEigenvalue { min: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("invalid subsystem {subsystem} for a state with {parties} parties")]
    BadSubsystem { subsystem: usize, parties: usize },

    #[error("density-matrix invariant violated ({invariant}): {detail}")]
    InvariantViolation { invariant: &'static str, detail: String },

    #[error("bad parameter {name} = {value}: {reason}")]
    BadParam { name: &'static str, value: f64, reason: &'static str },

    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    ShapeMismatch { what: &'static str, expected: usize, got: usize },

    #[error("trace {0:e} too small to normalise")]
    ZeroTrace(f64),

    #[error("mixing unit {unit} has cosh(mu + i psi) ~ 0 at element ({row}, {col}); phase undefined")]
    BranchCut { unit: usize, row: usize, col: usize },

    #[error("network state has vanishing norm")]
    ZeroNorm,

    #[error("overlap between network state and target vanishes")]
    ZeroOverlap,

    #[error("training diverged at iteration {iter} (loss {loss:e})")]
    Diverged { iter: usize, loss: f64 },

    #[error("block counts differ: {visible} visible blocks vs {hidden} hidden blocks")]
    InconsistentPartitions { visible: usize, hidden: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("every point of the trajectory violates support containment")]
    InfiniteQre,

    #[error("parse error: {0}")]
    Parse(String),
}

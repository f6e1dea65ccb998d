//! Dense complex linear algebra and quantum-information primitives.

mod density;
mod eig;
mod matrix;

pub use density::{
    bures_fidelity, fidelity_with_sqrt, min_pt_eigenvalue, partial_trace, partial_transpose,
    partial_transpose_matrix, qre, qre_from_spectra, trace_distance, trace_norm, DensityMatrix,
    Projection, HERMITIAN_TOL, PSD_TOL, SUPPORT_THRESHOLD, SUPPORT_WEIGHT, TRACE_TOL,
};
pub use eig::{hermitian_eig, matrix_function, MatrixFn, Spectrum, LOG_FLOOR};
pub use matrix::{devectorise, hadamard, kron, vectorise, ComplexMatrix};

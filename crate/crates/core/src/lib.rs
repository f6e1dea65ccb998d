//! Separable neural-network quantum states.
//!
//! Restricted-Boltzmann-machine parameterisations of pure and mixed qudit
//! states whose entanglement structure is fixed by the connectivity of the
//! weight matrix, a fidelity-descent learner for them, and entanglement
//! classification and quantification built on top.
//!
//! All sums run exactly over the full computational basis, so everything here
//! is meant for a handful of qudits.

pub mod ansatz;
pub mod error;
pub mod learning;
pub mod measures;
pub mod qmath;
pub mod separability;
pub mod states;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

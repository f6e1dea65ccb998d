//! Hermitian eigendecomposition by cyclic Jacobi rotations, and spectral
//! matrix functions built on it.

use serde::{Deserialize, Serialize};

use super::ComplexMatrix;
use crate::{Error, Result, C64};

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Floor applied to eigenvalues before taking a matrix logarithm.
pub const LOG_FLOOR: f64 = 1e-14;

/// Eigenvalues in ascending order; eigenvector `k` is column `k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    /// `V diag(f(λ)) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    if fl[k] != 0.0 {
                        acc += v[(i, k)] * v[(j, k)].conj() * fl[k];
                    }
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| l)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of the Hermitian part `(H + H^dagger)/2` of `h`.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<Spectrum> {
    h.check_finite()?;
    let n = h.dim();
    let mut a = h.hermitised();
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();

    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[(i, j)].norm_sqr();
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = scale == 0.0 || n == 1;
    let mut sweeps = 0;
    while !converged {
        if off_norm(&a) <= JACOBI_TOL * scale {
            converged = true;
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off_norm: off_norm(&a) });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE || mag <= 1e-3 * f64::EPSILON * scale {
                    continue;
                }
                rotate(&mut a, &mut v, p, q, apq, mag);
            }
        }
    }
    debug_assert!(converged);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&k| a[(k, k)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// One complex Jacobi rotation annihilating `a[p][q]`.
///
/// The rotation is `J = D R` with `D = diag(1, e^{-i phi})` on the `(p, q)`
/// plane making the pivot real, followed by the classical real rotation.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, apq: C64, mag: f64) {
    let n = a.dim();
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let ph = phase.conj();
    // J entries (row, col) within the plane.
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = ph * (-s);
    let jqq = ph * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFn {
    Sqrt,
    Log2,
    Ln,
}

/// Applies `f` to the spectrum of the Hermitian PSD matrix `h`.
///
/// Eigenvalues below `-1e-9 * trace` are rejected; the remaining ones are
/// clamped to 0 for `sqrt` and to [`LOG_FLOOR`] for the logarithms.
pub fn matrix_function(h: &ComplexMatrix, f: MatrixFn) -> Result<ComplexMatrix> {
    let spec = hermitian_eig(h)?;
    let trace: f64 = spec.eigenvalues.iter().sum();
    let floor = -1e-9 * trace.abs().max(f64::MIN_POSITIVE);
    if spec.min() < floor {
        return Err(Error::NegativeEigenvalue { min: spec.min() });
    }
    Ok(match f {
        MatrixFn::Sqrt => spec.map(|l| l.max(0.0).sqrt()),
        MatrixFn::Log2 => spec.map(|l| l.max(LOG_FLOOR).log2()),
        MatrixFn::Ln => spec.map(|l| l.max(LOG_FLOOR).ln()),
    })
}

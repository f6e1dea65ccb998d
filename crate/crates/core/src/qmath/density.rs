use serde::{Deserialize, Serialize};

use super::{hermitian_eig, ComplexMatrix, Spectrum, LOG_FLOOR};
use crate::{Error, Result, C64};

/// Relative Hermiticity tolerance applied on construction.
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
/// Eigenvalues of the second argument of [`qre`] below this count as outside its support.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;
/// Weight of the first argument on a null direction above which [`qre`] is infinite.
pub const SUPPORT_WEIGHT: f64 = 1e-8;

/// Trace-one Hermitian PSD matrix over a multi-qudit basis.
///
/// Basis ordering is the computational one with the leftmost qudit most
/// significant: label `(s_1, ..., s_n)` sits at `sum_i s_i * prod_{j>i} d_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    dims: Vec<usize>,
}

/// What [`DensityMatrix::project`] had to change.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// `||H - H^dagger||_F` of the input.
    pub hermitian_deviation: f64,
    /// Sum of magnitudes of the eigenvalues clipped to zero.
    pub clipped: f64,
    /// Trace before renormalisation.
    pub trace: f64,
}

impl DensityMatrix {
    /// Validates `mat` against the density-matrix invariants.
    pub fn new(mat: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        Self::with_tolerances(mat, dims, TRACE_TOL, HERMITIAN_TOL)
    }

    pub fn with_tolerances(mat: ComplexMatrix, dims: Vec<usize>, trace_tol: f64, herm_tol: f64) -> Result<Self> {
        check_dims(&mat, &dims)?;
        mat.check_finite()?;
        let norm = mat.frobenius_norm();
        let dev = mat.hermitian_deviation();
        if dev > herm_tol * norm.max(1.0) {
            return Err(Error::InvariantViolation {
                invariant: "hermiticity",
                detail: format!("||H - H^dagger|| = {dev:e}"),
            });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::InvariantViolation { invariant: "trace", detail: format!("trace = {tr}") });
        }
        let spec = hermitian_eig(&mat)?;
        if spec.min() < -PSD_TOL {
            return Err(Error::InvariantViolation {
                invariant: "positivity",
                detail: format!("minimum eigenvalue {:e}", spec.min()),
            });
        }
        Ok(DensityMatrix { mat: mat.hermitised(), dims })
    }

    /// Hermitise, clip negative eigenvalues to zero and renormalise the trace.
    pub fn project(mat: &ComplexMatrix, dims: Vec<usize>) -> Result<(Self, Projection)> {
        check_dims(mat, &dims)?;
        let hermitian_deviation = mat.hermitian_deviation();
        let spec = hermitian_eig(mat)?;
        let clipped: f64 = spec.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
        let trace: f64 = spec.eigenvalues.iter().map(|l| l.max(0.0)).sum();
        if trace < 1e-300 {
            return Err(Error::ZeroTrace(trace));
        }
        let m = spec.map(|l| l.max(0.0) / trace);
        Ok((DensityMatrix { mat: m, dims }, Projection { hermitian_deviation, clipped, trace }))
    }

    /// Trace-normalises a matrix that is already Hermitian PSD up to rounding.
    pub fn normalised(mat: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        check_dims(&mat, &dims)?;
        let tr = mat.trace().re;
        if !(tr > 1e-300) {
            return Err(Error::ZeroTrace(tr));
        }
        Ok(DensityMatrix { mat: mat.hermitised().scale_real(1.0 / tr), dims })
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn from_pure(psi: &[C64], dims: Vec<usize>) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm > 1e-300) {
            return Err(Error::ZeroNorm);
        }
        let m = ComplexMatrix::outer(psi).scale_real(1.0 / norm);
        check_dims(&m, &dims)?;
        Ok(DensityMatrix { mat: m, dims })
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        DensityMatrix { mat: ComplexMatrix::identity(n).scale_real(1.0 / n as f64), dims }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        hermitian_eig(&self.mat)
    }

    pub fn purity(&self) -> f64 {
        self.mat.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Convex combination `a * self + (1 - a) * other`.
    pub fn mix(&self, other: &Self, a: f64) -> Result<Self> {
        same_dims(self, other)?;
        let m = &self.mat.scale_real(a) + &other.mat.scale_real(1.0 - a);
        Ok(DensityMatrix { mat: m, dims: self.dims.clone() })
    }
}

fn check_dims(mat: &ComplexMatrix, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || prod != mat.dim() {
        return Err(Error::DimMismatch { left: mat.dim(), right: prod });
    }
    Ok(())
}

fn same_dims(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dims != b.dims {
        return Err(Error::DimMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

/// `sqrt` of a PSD matrix with negative rounding noise clipped.
fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(m)?.map(|l| l.max(0.0).sqrt()))
}

/// Bures fidelity `Tr sqrt(sqrt(sigma) rho sqrt(sigma))`, clamped to [0, 1].
pub fn bures_fidelity(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    same_dims(sigma, rho)?;
    let s = psd_sqrt(&sigma.mat)?;
    fidelity_with_sqrt(&s, &rho.mat)
}

/// Bures fidelity given a precomputed `sqrt(sigma)`.
pub fn fidelity_with_sqrt(sqrt_sigma: &ComplexMatrix, rho: &ComplexMatrix) -> Result<f64> {
    let inner = sqrt_sigma.matmul(rho)?.matmul(sqrt_sigma)?;
    let spec = hermitian_eig(&inner)?;
    let f: f64 = spec.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Trace norm `Tr sqrt(X^dagger X)` of a Hermitian matrix (sum of |eigenvalues|).
pub fn trace_norm(x: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eig(x)?.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// `||sigma - rho||_1 / 2`.
pub fn trace_distance(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    same_dims(sigma, rho)?;
    Ok((0.5 * trace_norm(&(&sigma.mat - &rho.mat))?).clamp(0.0, 1.0))
}

/// Quantum relative entropy `S(rho || sigma) = Tr[rho (log2 rho - log2 sigma)]` in bits.
///
/// Returns `f64::INFINITY` when `rho` has weight above [`SUPPORT_WEIGHT`] on an
/// eigendirection of `sigma` whose eigenvalue is below [`SUPPORT_THRESHOLD`].
pub fn qre(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dims(rho, sigma)?;
    let rho_spec = hermitian_eig(&rho.mat)?;
    let sigma_spec = hermitian_eig(&sigma.mat)?;
    Ok(qre_from_spectra(&rho_spec, &sigma_spec))
}

/// [`qre`] from precomputed spectra; lets callers cache the target's spectrum.
pub fn qre_from_spectra(rho: &Spectrum, sigma: &Spectrum) -> f64 {
    let n = rho.eigenvalues.len();
    let neg_entropy: f64 = rho
        .eigenvalues
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum();
    let (u, w) = (&rho.eigenvectors, &sigma.eigenvectors);
    let mut cross = 0.0;
    for (j, &q) in sigma.eigenvalues.iter().enumerate() {
        // weight of rho on sigma's j-th eigenvector: sum_i p_i |<u_i|w_j>|^2
        let mut weight = 0.0;
        for (i, &p) in rho.eigenvalues.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let mut ov = C64::new(0.0, 0.0);
            for k in 0..n {
                ov += u[(k, i)].conj() * w[(k, j)];
            }
            weight += p * ov.norm_sqr();
        }
        if q < SUPPORT_THRESHOLD && weight > SUPPORT_WEIGHT {
            return f64::INFINITY;
        }
        cross += weight * q.max(LOG_FLOOR).log2();
    }
    (neg_entropy - cross).max(0.0)
}

/// Partial transpose on one party; `subsystem` indexes `rho.dims()`.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: usize) -> Result<ComplexMatrix> {
    partial_transpose_matrix(&rho.mat, &rho.dims, subsystem)
}

pub fn partial_transpose_matrix(m: &ComplexMatrix, dims: &[usize], subsystem: usize) -> Result<ComplexMatrix> {
    if dims.len() < 2 || subsystem >= dims.len() {
        return Err(Error::BadSubsystem { subsystem, parties: dims.len() });
    }
    check_dims(m, dims)?;
    let stride: usize = dims[subsystem + 1..].iter().product();
    let d = dims[subsystem];
    let n = m.dim();
    Ok(ComplexMatrix::from_fn(n, |i, j| {
        let di = (i / stride) % d;
        let dj = (j / stride) % d;
        // swap the digit of this party between row and column
        let i2 = i - di * stride + dj * stride;
        let j2 = j - dj * stride + di * stride;
        m[(i2, j2)]
    }))
}

/// Smallest eigenvalue of the partial transpose on `subsystem`.
pub fn min_pt_eigenvalue(rho: &DensityMatrix, subsystem: usize) -> Result<f64> {
    Ok(hermitian_eig(&partial_transpose(rho, subsystem)?)?.min())
}

/// Reduced state on the parties listed in `keep` (ascending, in `dims` order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = &rho.dims;
    if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::BadSubsystem { subsystem: keep.iter().copied().max().unwrap_or(0), parties: dims.len() });
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let nk: usize = kept_dims.iter().product();
    let nt: usize = traced_dims.iter().product();

    let compose = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut digits = vec![0usize; dims.len()];
        let mut r = kept_idx;
        for (pos, &k) in keep.iter().enumerate().rev() {
            digits[k] = r % kept_dims[pos];
            r /= kept_dims[pos];
        }
        let mut r = traced_idx;
        for (pos, &k) in traced.iter().enumerate().rev() {
            digits[k] = r % traced_dims[pos];
            r /= traced_dims[pos];
        }
        digits.iter().zip(dims).fold(0, |acc, (&s, &d)| acc * d + s)
    };

    let mut out = ComplexMatrix::zeros(nk);
    for i in 0..nk {
        for j in 0..nk {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..nt {
                acc += rho.mat[(compose(i, t), compose(j, t))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix { mat: out, dims: kept_dims })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis_state(d: usize, k: usize) -> DensityMatrix {
        let mut psi = vec![C64::new(0.0, 0.0); d];
        psi[k] = C64::new(1.0, 0.0);
        DensityMatrix::from_pure(&psi, vec![d]).unwrap()
    }

    fn bell() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)];
        DensityMatrix::from_pure(&psi, vec![2, 2]).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let zero = basis_state(2, 0);
        let one = basis_state(2, 1);
        let mixed = DensityMatrix::maximally_mixed(vec![2]);
        assert!((bures_fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(bures_fidelity(&zero, &one).unwrap() < 1e-12);
        let f = bures_fidelity(&zero, &mixed).unwrap();
        assert!((f - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12, "{f}");
        let g = bures_fidelity(&mixed, &zero).unwrap();
        assert!((f - g).abs() < 1e-8);
    }

    #[test]
    fn trace_distance_examples() {
        let zero = basis_state(2, 0);
        let one = basis_state(2, 1);
        let mixed = DensityMatrix::maximally_mixed(vec![2]);
        assert!(trace_distance(&zero, &zero).unwrap() < 1e-14);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-14);
        assert!((trace_distance(&zero, &mixed).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn qre_examples() {
        let zero = basis_state(2, 0);
        let one = basis_state(2, 1);
        let mixed = DensityMatrix::maximally_mixed(vec![2]);
        assert!(qre(&mixed, &mixed).unwrap().abs() < 1e-12);
        assert!((qre(&zero, &mixed).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(qre(&zero, &one).unwrap(), f64::INFINITY);
        // a pure state against itself has zero relative entropy
        assert!(qre(&zero, &zero).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dim_mismatch_is_reported() {
        let a = DensityMatrix::maximally_mixed(vec![2]);
        let b = DensityMatrix::maximally_mixed(vec![3]);
        assert!(matches!(bures_fidelity(&a, &b), Err(Error::DimMismatch { .. })));
        assert!(matches!(trace_distance(&a, &b), Err(Error::DimMismatch { .. })));
        assert!(matches!(qre(&a, &b), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let pt = partial_transpose(&bell(), 1).unwrap();
        let s = hermitian_eig(&pt).unwrap();
        assert!((s.min() + 0.5).abs() < 1e-14);
        assert!((s.max() - 0.5).abs() < 1e-14);
        let back = partial_transpose_matrix(&pt, &[2, 2], 1).unwrap();
        assert_eq!(&back, bell().matrix());
    }

    #[test]
    fn product_state_is_ppt() {
        let a = DensityMatrix::from_pure(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)], vec![2]).unwrap();
        let b = DensityMatrix::maximally_mixed(vec![3]);
        let ab = DensityMatrix::new(super::super::kron(a.matrix(), b.matrix()), vec![2, 3]).unwrap();
        for sub in 0..2 {
            assert!(min_pt_eigenvalue(&ab, sub).unwrap() > -1e-14);
        }
    }

    #[test]
    fn bad_subsystem() {
        let a = DensityMatrix::maximally_mixed(vec![4]);
        assert!(matches!(partial_transpose(&a, 0), Err(Error::BadSubsystem { .. })));
        assert!(matches!(partial_transpose(&bell(), 2), Err(Error::BadSubsystem { .. })));
    }

    #[test]
    fn partial_trace_of_bell_is_mixed() {
        let r = partial_trace(&bell(), &[0]).unwrap();
        assert!(r.matrix().max_abs_diff(&ComplexMatrix::from_diag(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn constructor_rejects_bad_trace_and_hermiticity() {
        let half = ComplexMatrix::from_diag(&[0.25, 0.25]);
        assert!(matches!(
            DensityMatrix::new(half, vec![2]),
            Err(Error::InvariantViolation { invariant: "trace", .. })
        ));
        let mut m = ComplexMatrix::from_diag(&[0.5, 0.5]);
        m[(0, 1)] = C64::new(1e-3, 0.0);
        assert!(matches!(
            DensityMatrix::new(m, vec![2]),
            Err(Error::InvariantViolation { invariant: "hermiticity", .. })
        ));
        let neg = ComplexMatrix::from_diag(&[1.5, -0.5]);
        assert!(matches!(
            DensityMatrix::new(neg, vec![2]),
            Err(Error::InvariantViolation { invariant: "positivity", .. })
        ));
    }

    #[test]
    fn projection_clips_and_renormalises() {
        let m = ComplexMatrix::from_diag(&[1.0, -0.1, 1.0]);
        let (rho, p) = DensityMatrix::project(&m, vec![3]).unwrap();
        assert!((p.clipped - 0.1).abs() < 1e-14);
        assert!((p.trace - 2.0).abs() < 1e-14);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-14);
    }
}

use serde::{Deserialize, Serialize};

use crate::ansatz::{Ansatz, AnsatzKind};
use crate::qmath::{
    fidelity_with_sqrt, hermitian_eig, qre_from_spectra, trace_norm, vectorise, ComplexMatrix, DensityMatrix, Spectrum,
};
use crate::{Error, Result, C64};

/// Polar split `t(x) = lambda(x) * xi(x)` with `|xi| = 1` and `xi = 1` where `lambda = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetDecomposition {
    pub lambda: Vec<f64>,
    pub xi: Vec<C64>,
}

impl TargetDecomposition {
    pub fn new(t: &[C64]) -> Self {
        let lambda: Vec<f64> = t.iter().map(|z| z.norm()).collect();
        let xi = t
            .iter()
            .zip(&lambda)
            .map(|(z, &l)| if l > 0.0 { z / l } else { C64::new(1.0, 0.0) })
            .collect();
        TargetDecomposition { lambda, xi }
    }

    pub fn reconstruct(&self) -> Vec<C64> {
        self.lambda.iter().zip(&self.xi).map(|(l, x)| x * *l).collect()
    }
}

/// A learning target with the quantities monitoring needs cached.
#[derive(Clone, Debug)]
pub struct Target {
    density: DensityMatrix,
    pure: Option<Vec<C64>>,
    vectorised: Vec<C64>,
    spectrum: Spectrum,
    sqrt: ComplexMatrix,
}

/// Monitored distances between a learner and the target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Bures fidelity `Tr sqrt(sqrt(t) s sqrt(t))`.
    pub fidelity: f64,
    /// `S(target || learner)` in bits; `+inf` on support violation.
    pub qre: f64,
    pub trace_distance: f64,
    /// Negative eigenvalue mass clipped from the learner before evaluation.
    pub clipped: f64,
}

/// Purity above which a target counts as a pure state.
const PURE_TOL: f64 = 1e-12;

impl Target {
    pub fn from_density(density: DensityMatrix) -> Result<Self> {
        let spectrum = density.spectrum()?;
        let sqrt = spectrum.map(|l| l.max(0.0).sqrt());
        let pure = if density.purity() > 1.0 - PURE_TOL {
            let n = density.dim();
            let top = n - 1;
            let mut v: Vec<C64> = (0..n).map(|i| spectrum.eigenvectors[(i, top)]).collect();
            // fix the global phase on the largest component
            let k = (0..n).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap_or(0);
            let ph = v[k].conj() / v[k].norm();
            v.iter_mut().for_each(|z| *z *= ph);
            Some(v)
        } else {
            None
        };
        let vectorised = vectorise(density.matrix());
        Ok(Target { density, pure, vectorised, spectrum, sqrt })
    }

    pub fn pure(psi: &[C64], dims: Vec<usize>) -> Result<Self> {
        let mut t = Self::from_density(DensityMatrix::from_pure(psi, dims)?)?;
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        t.pure = Some(psi.iter().map(|z| z / norm).collect());
        Ok(t)
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }

    pub fn state_vector(&self) -> Option<&[C64]> {
        self.pure.as_deref()
    }

    pub fn is_pure(&self) -> bool {
        self.pure.is_some()
    }

    /// The vector a learner of `kind` is fitted to.
    pub fn vector_for(&self, kind: AnsatzKind) -> Result<&[C64]> {
        if kind.is_mixed() {
            Ok(&self.vectorised)
        } else {
            self.pure
                .as_deref()
                .ok_or(Error::BadParam { name: "target", value: f64::NAN, reason: "pure ansatz needs a pure target" })
        }
    }

    pub fn decomposition(&self, kind: AnsatzKind) -> Result<TargetDecomposition> {
        Ok(TargetDecomposition::new(self.vector_for(kind)?))
    }

    /// Fidelity, relative entropy and trace distance of the learner's
    /// Hermitised, PSD-clipped, trace-normalised state.
    pub fn snapshot(&self, ansatz: &Ansatz) -> Result<Snapshot> {
        let raw = ansatz.raw_matrix()?;
        let spec = hermitian_eig(&raw)?;
        let clipped_sum: f64 = spec.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
        let trace: f64 = spec.eigenvalues.iter().map(|l| l.max(0.0)).sum();
        if !(trace > 1e-300) {
            return Err(Error::ZeroTrace(trace));
        }
        let sigma_spec = Spectrum {
            eigenvalues: spec.eigenvalues.iter().map(|l| l.max(0.0) / trace).collect(),
            eigenvectors: spec.eigenvectors,
        };
        let sigma = sigma_spec.reconstruct();
        let fidelity = match (&self.pure, ansatz.is_mixed()) {
            (Some(psi), false) => {
                let phi = ansatz.state_vector()?;
                psi.iter().zip(&phi).map(|(a, b)| a.conj() * b).sum::<C64>().norm().min(1.0)
            }
            (Some(psi), true) => sigma.expectation(psi)?.re.clamp(0.0, 1.0).sqrt(),
            (None, _) => fidelity_with_sqrt(&self.sqrt, &sigma)?,
        };
        let qre = qre_from_spectra(&self.spectrum, &sigma_spec);
        let trace_distance = (0.5 * trace_norm(&(self.density.matrix() - &sigma))?).clamp(0.0, 1.0);
        Ok(Snapshot { fidelity, qre, trace_distance, clipped: clipped_sum / trace })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decomposition_round_trip() {
        let t = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.0), C64::new(0.0, -0.8)];
        let d = TargetDecomposition::new(&t);
        assert_eq!(d.xi[1], C64::new(1.0, 0.0));
        assert_eq!(d.reconstruct(), t);
    }

    #[test]
    fn rank_one_density_is_detected_as_pure() {
        let bell = crate::states::bell_state(2);
        let t = Target::from_density(bell).unwrap();
        let psi = t.state_vector().unwrap();
        let expect = crate::states::bell_vector(2);
        let ov: C64 = psi.iter().zip(&expect).map(|(a, b)| a.conj() * b).sum();
        assert!((ov.norm() - 1.0).abs() < 1e-12);
        assert!(!Target::from_density(crate::states::werner(-0.5, 2).unwrap()).unwrap().is_pure());
    }
}

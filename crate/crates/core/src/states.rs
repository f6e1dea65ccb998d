//! Target states, channels and closed-form reference values.

use serde::{Deserialize, Serialize};

use crate::qmath::{ComplexMatrix, DensityMatrix};
use crate::{Error, Result, C64};

fn bad(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::BadParam { name, value, reason }
}

/// Two-qudit flip operator `F = sum_ij |ij><ji|`.
pub fn flip_operator(d: usize) -> ComplexMatrix {
    let mut f = ComplexMatrix::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            f[(i * d + j, j * d + i)] = C64::new(1.0, 0.0);
        }
    }
    f
}

/// `|Phi+> = sum_i |ii> / sqrt(d)` as a state vector.
pub fn bell_vector(d: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    let amp = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[i * d + i] = C64::new(amp, 0.0);
    }
    v
}

pub fn bell_state(d: usize) -> DensityMatrix {
    DensityMatrix::from_pure(&bell_vector(d), vec![d, d]).expect("Bell vector is normalised")
}

/// Werner state `((d - eta) I + (d eta - 1) F) / (d (d^2 - 1))`, `eta = <F>`.
pub fn werner(eta: f64, d: usize) -> Result<DensityMatrix> {
    if !(-1.0..=1.0).contains(&eta) {
        return Err(bad("eta", eta, "Werner parameter must lie in [-1, 1]"));
    }
    if d < 2 {
        return Err(bad("d", d as f64, "local dimension must be at least 2"));
    }
    let df = d as f64;
    let norm = df * (df * df - 1.0);
    let id = ComplexMatrix::identity(d * d).scale_real((df - eta) / norm);
    let f = flip_operator(d).scale_real((df * eta - 1.0) / norm);
    DensityMatrix::normalised(&id + &f, vec![d, d])
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Closed-form relative entropy of entanglement of a Werner state (bits).
pub fn werner_ree(eta: f64) -> Result<f64> {
    if !(-1.0..=0.0).contains(&eta) {
        return Err(bad("eta", eta, "closed form holds for eta in [-1, 0]"));
    }
    let v = 0.5 * xlog2x(1.0 + eta) + 0.5 * xlog2x(1.0 - eta);
    Ok(v.max(0.0))
}

/// Relative entropy of entanglement of the isotropic state with singlet
/// fraction `f = <Phi+|rho|Phi+>` (zero for `f <= 1/d`).
pub fn isotropic_ree(f: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(bad("f", f, "singlet fraction must lie in [0, 1]"));
    }
    let df = d as f64;
    if f <= 1.0 / df {
        return Ok(0.0);
    }
    let rest = (1.0 - f) / (df - 1.0);
    Ok((df.log2() + xlog2x(f) + (1.0 - f) * if rest > 0.0 { rest.log2() } else { 0.0 }).max(0.0))
}

/// Exact single-shot capacity bound of the `d`-dimensional depolarising channel.
pub fn depolarising_bound(p: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(bad("p", p, "depolarising probability must lie in [0, 1]"));
    }
    let df = d as f64;
    isotropic_ree((1.0 - p) + p / (df * df), d)
}

/// Two-qutrit state mixing `Phi+` with the shifted projectors `sigma_+`, `sigma_-`.
///
/// `sigma_+` enters with coefficient `+1/3`, which keeps the mixture
/// positive for every `alpha` in [2, 5]: separable on [2, 3], PPT-entangled on
/// (3, 4], NPT on (4, 5].
pub fn bound_entangled(alpha: f64) -> Result<DensityMatrix> {
    if !(2.0..=5.0).contains(&alpha) {
        return Err(bad("alpha", alpha, "alpha must lie in [2, 5]"));
    }
    let d = 3;
    let proj = |pairs: &[(usize, usize)]| {
        let mut m = ComplexMatrix::zeros(9);
        for &(a, b) in pairs {
            let k = a * d + b;
            m[(k, k)] = C64::new(1.0 / 3.0, 0.0);
        }
        m
    };
    let sigma_plus = proj(&[(0, 1), (1, 2), (2, 0)]);
    let sigma_minus = proj(&[(1, 0), (2, 1), (0, 2)]);
    let phi = ComplexMatrix::outer(&bell_vector(3)).scale_real(2.0 / 7.0);
    let m = &(&phi + &sigma_plus.scale_real(alpha / 7.0)) + &sigma_minus.scale_real((5.0 - alpha) / 7.0);
    DensityMatrix::new(m, vec![3, 3])
}

/// `sum_k |k...k> / sqrt(d)` on `n` qudits.
pub fn ghz_vector(d: usize, n: usize) -> Vec<C64> {
    let dim = d.pow(n as u32);
    let mut v = vec![C64::new(0.0, 0.0); dim];
    let amp = 1.0 / (d as f64).sqrt();
    for k in 0..d {
        let idx = (0..n).fold(0, |acc, _| acc * d + k);
        v[idx] = C64::new(amp, 0.0);
    }
    v
}

pub fn ghz(d: usize, n: usize) -> DensityMatrix {
    DensityMatrix::from_pure(&ghz_vector(d, n), vec![d; n]).expect("GHZ vector is normalised")
}

/// `(|001> + |010> + |100>) / sqrt(3)`.
pub fn w_vector() -> Vec<C64> {
    let a = C64::new(1.0 / 3f64.sqrt(), 0.0);
    let mut v = vec![C64::new(0.0, 0.0); 8];
    v[0b001] = a;
    v[0b010] = a;
    v[0b100] = a;
    v
}

pub fn w_state() -> DensityMatrix {
    DensityMatrix::from_pure(&w_vector(), vec![2, 2, 2]).expect("W vector is normalised")
}

/// Global depolarisation `(1 - p) rho + p I / D`.
pub fn depolarise(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(bad("p", p, "depolarising probability must lie in [0, 1]"));
    }
    rho.mix(&DensityMatrix::maximally_mixed(rho.dims().to_vec()), 1.0 - p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Depolarising,
    HolevoWerner,
    Identity,
}

/// A single-qudit channel; `param` is `p` (depolarising) or `eta` (Holevo-Werner).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub d: usize,
    pub param: f64,
}

impl ChannelSpec {
    pub fn new(kind: ChannelKind, d: usize, param: f64) -> Result<Self> {
        if d < 2 {
            return Err(bad("d", d as f64, "local dimension must be at least 2"));
        }
        match kind {
            ChannelKind::Depolarising if !(0.0..=1.0).contains(&param) => {
                Err(bad("p", param, "depolarising probability must lie in [0, 1]"))
            }
            ChannelKind::HolevoWerner if !(-1.0..=1.0).contains(&param) => {
                Err(bad("eta", param, "Holevo-Werner parameter must lie in [-1, 1]"))
            }
            _ => Ok(ChannelSpec { kind, d, param }),
        }
    }

    /// Action on a `d x d` operator (linear, not assumed trace one).
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let d = self.d as f64;
        let tr = x.trace();
        match self.kind {
            ChannelKind::Identity => x.clone(),
            ChannelKind::Depolarising => {
                let p = self.param;
                &x.scale_real(1.0 - p) + &ComplexMatrix::identity(self.d).scale(tr * (p / d))
            }
            ChannelKind::HolevoWerner => {
                let eta = self.param;
                let norm = d * d - 1.0;
                &ComplexMatrix::identity(self.d).scale(tr * ((d - eta) / norm))
                    + &x.transpose().scale_real((d * eta - 1.0) / norm)
            }
        }
    }

    /// Exact single-shot REE of the Choi state, where known in closed form.
    pub fn exact_bound(&self) -> Result<f64> {
        match self.kind {
            ChannelKind::Identity => Ok((self.d as f64).log2()),
            ChannelKind::Depolarising => depolarising_bound(self.param, self.d),
            ChannelKind::HolevoWerner => {
                if self.param > 0.0 {
                    Ok(0.0)
                } else {
                    werner_ree(self.param)
                }
            }
        }
    }
}

/// Choi state `(I ⊗ E)[Phi+]` built by applying the channel to each `|i><j|`.
pub fn choi(channel: &ChannelSpec) -> Result<DensityMatrix> {
    let d = channel.d;
    let mut out = ComplexMatrix::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut eij = ComplexMatrix::zeros(d);
            eij[(i, j)] = C64::new(1.0, 0.0);
            let img = channel.apply(&eij);
            for a in 0..d {
                for b in 0..d {
                    out[(i * d + a, j * d + b)] += img[(a, b)] / d as f64;
                }
            }
        }
    }
    DensityMatrix::new(out, vec![d, d])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{min_pt_eigenvalue, partial_trace};

    #[test]
    fn werner_trace_and_hermiticity() {
        for &d in &[2, 3, 5] {
            for &eta in &[-1.0, -0.75, -0.3, 0.0, 0.4, 1.0] {
                let w = werner(eta, d).unwrap();
                assert!((w.matrix().trace().re - 1.0).abs() < 1e-12);
                assert!(w.matrix().hermitian_deviation() < 1e-15);
                // <F> recovers eta
                let f = w.matrix().matmul(&flip_operator(d)).unwrap().trace().re;
                assert!((f - eta).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn werner_minus_one_is_singlet() {
        let w = werner(-1.0, 2).unwrap();
        let singlet = (&ComplexMatrix::identity(4) - &flip_operator(2)).scale_real(0.5);
        assert!(w.matrix().max_abs_diff(&singlet) < 1e-15);
    }

    #[test]
    fn werner_fig4_state() {
        let w = werner(-0.75, 5).unwrap();
        assert_eq!(w.dim(), 25);
        assert!(w.spectrum().unwrap().min() > 0.0);
    }

    #[test]
    fn werner_rejects_out_of_range() {
        assert!(matches!(werner(1.5, 3), Err(Error::BadParam { .. })));
        assert!(matches!(werner(0.0, 1), Err(Error::BadParam { .. })));
    }

    #[test]
    fn werner_ree_values() {
        assert!((werner_ree(-0.75).unwrap() - 0.4564).abs() < 5e-5);
        assert_eq!(werner_ree(0.0).unwrap(), 0.0);
        assert!((werner_ree(-1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(werner_ree(0.2).is_err());
    }

    #[test]
    fn bound_entangled_regions() {
        for k in 0..=30 {
            let alpha = 2.0 + 0.1 * k as f64;
            let s = bound_entangled(alpha).unwrap();
            assert!((s.matrix().trace().re - 1.0).abs() < 1e-12);
            let m = min_pt_eigenvalue(&s, 1).unwrap();
            if alpha <= 4.0 + 1e-12 {
                assert!(m > -1e-12, "alpha = {alpha}: {m}");
            }
        }
        assert!(min_pt_eigenvalue(&bound_entangled(4.5).unwrap(), 1).unwrap() < -1e-3);
        assert!(bound_entangled(1.9).is_err());
    }

    #[test]
    fn w_and_ghz() {
        let w = w_state();
        assert!((w.matrix().trace().re - 1.0).abs() < 1e-15);
        let ov: C64 = w_vector().iter().zip(ghz_vector(2, 3)).map(|(a, b)| a.conj() * b).sum();
        assert_eq!(ov.norm(), 0.0);
        let r = partial_trace(&ghz(2, 3), &[1]).unwrap();
        assert!(r.matrix().max_abs_diff(&ComplexMatrix::from_diag(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn depolarise_endpoints() {
        let g = ghz(2, 3);
        assert!(depolarise(&g, 0.0).unwrap().matrix().max_abs_diff(g.matrix()) < 1e-15);
        let mm = DensityMatrix::maximally_mixed(vec![2, 2, 2]);
        assert!(depolarise(&g, 1.0).unwrap().matrix().max_abs_diff(mm.matrix()) < 1e-15);
        let s = depolarise(&w_state(), 1.0 / 3.0).unwrap();
        assert!((s.matrix()[(0, 0)].re - 1.0 / 24.0).abs() < 1e-15);
        assert!((s.matrix()[(1, 2)].re - 2.0 / 9.0).abs() < 1e-15);
        assert!(depolarise(&g, -0.1).is_err());
    }

    #[test]
    fn choi_states() {
        for &d in &[2, 3] {
            let id = choi(&ChannelSpec::new(ChannelKind::Identity, d, 0.0).unwrap()).unwrap();
            assert!(id.matrix().max_abs_diff(bell_state(d).matrix()) < 1e-15);

            let p = 0.3;
            let dep = choi(&ChannelSpec::new(ChannelKind::Depolarising, d, p).unwrap()).unwrap();
            let iso = &bell_state(d).matrix().scale_real(1.0 - p)
                + &ComplexMatrix::identity(d * d).scale_real(p / (d * d) as f64);
            assert!(dep.matrix().max_abs_diff(&iso) < 1e-15);

            for &eta in &[-1.0, -0.6, 0.0, 0.5] {
                let hw = choi(&ChannelSpec::new(ChannelKind::HolevoWerner, d, eta).unwrap()).unwrap();
                assert!(hw.matrix().max_abs_diff(werner(eta, d).unwrap().matrix()) < 1e-15);
            }
        }
    }

    #[test]
    fn channel_parameter_ranges() {
        assert!(ChannelSpec::new(ChannelKind::Depolarising, 2, 1.2).is_err());
        assert!(ChannelSpec::new(ChannelKind::HolevoWerner, 3, -1.1).is_err());
        assert!(ChannelSpec::new(ChannelKind::Identity, 1, 0.0).is_err());
    }

    #[test]
    fn closed_form_bounds() {
        assert!((depolarising_bound(0.0, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!((depolarising_bound(0.0, 3).unwrap() - 3f64.log2()).abs() < 1e-14);
        assert_eq!(depolarising_bound(1.0, 3).unwrap(), 0.0);
        let hw = ChannelSpec::new(ChannelKind::HolevoWerner, 3, -0.5).unwrap();
        assert_eq!(hw.exact_bound().unwrap(), werner_ree(-0.5).unwrap());
    }
}

//! Network building blocks: real and complex RBMs and the mixing layer.
//!
//! Every block exposes a flat real parameter layout (complex numbers as
//! interleaved `[re, im]`) and a `backprop` that accumulates
//! `Re sum_x coeff_x * d log f(x) / d theta` into a gradient slice.

use std::f64::consts::LN_2;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Basis;
use crate::{Error, Result, C64};

/// `ln(2 cosh x)` for real `x`, overflow-free.
#[inline]
pub fn ln_2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// `|cosh z|^2 = (cosh 2 mu + cos 2 psi) / 2`, returned as its logarithm.
#[inline]
pub fn ln_abs_cosh_sq(z: C64) -> f64 {
    let a = z.re.abs();
    let e = (-2.0 * a).exp();
    let c = z.im.cos();
    let q = (1.0 - e) * (1.0 - e) + 4.0 * e * c * c;
    2.0 * a - 2.0 * LN_2 + q.max(0.0).ln()
}

/// Principal-branch `ln cosh z`.
#[inline]
pub fn ln_cosh(z: C64) -> C64 {
    let re = 0.5 * ln_abs_cosh_sq(z);
    let im = (z.re.tanh() * z.im.sin()).atan2(z.im.cos());
    C64::new(re, im)
}

/// Complex `tanh`, stable for large real parts and near the zeros of `cosh`.
#[inline]
pub fn tanh_c(z: C64) -> C64 {
    let a = z.re.abs();
    let sg = if z.re < 0.0 { -1.0 } else { 1.0 };
    let e = (-2.0 * a).exp();
    let (s, c) = z.im.sin_cos();
    let q = (1.0 - e) * (1.0 - e) + 4.0 * e * c * c;
    C64::new(sg * (1.0 - e * e) / q, 4.0 * e * s * c / q)
}

/// `(ln cosh z, tanh z)` sharing one exponential and one `sin_cos`.
#[inline]
pub fn ln_cosh_tanh(z: C64) -> (C64, C64) {
    let a = z.re.abs();
    let sg = if z.re < 0.0 { -1.0 } else { 1.0 };
    let e = (-2.0 * a).exp();
    let (s, c) = z.im.sin_cos();
    let s2 = 2.0 * s * c;
    // |cosh z|^2 = e^{2a} q / 4, written without cancellation near the zeros
    let q = (1.0 - e) * (1.0 - e) + 4.0 * e * c * c;
    let ln_r = a - LN_2 + 0.5 * q.max(0.0).ln();
    let arg = (sg * (1.0 - e) / (1.0 + e) * s).atan2(c);
    let tanh = C64::new(sg * (1.0 - e * e) / q, 2.0 * e * s2 / q);
    (C64::new(ln_r, arg), tanh)
}

/// `|cosh z|` below this leaves the phase of the vectorised mixing factor undefined.
pub const BRANCH_CUT_TOL: f64 = 1e-12;

/// `|cosh z|` below this cannot be carried through `ln` and `tanh` at all.
pub const UNDERFLOW_TOL: f64 = 1e-150;

fn gaussian_vec<R: Rng + ?Sized>(n: usize, std: f64, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, std).expect("standard deviation must be finite and non-negative");
    (0..n).map(|_| normal.sample(rng)).collect()
}

fn gaussian_cvec<R: Rng + ?Sized>(n: usize, std: f64, rng: &mut R) -> Vec<C64> {
    let normal = Normal::new(0.0, std).expect("standard deviation must be finite and non-negative");
    (0..n).map(|_| C64::new(normal.sample(rng), normal.sample(rng))).collect()
}

fn read_complex(flat: &[f64], out: &mut [C64]) {
    for (k, z) in out.iter_mut().enumerate() {
        *z = C64::new(flat[2 * k], flat[2 * k + 1]);
    }
}

fn write_complex(src: &[C64], flat: &mut Vec<f64>) {
    for z in src {
        flat.push(z.re);
        flat.push(z.im);
    }
}

/// Real-valued RBM `{a, b, W}` with `log f(s) = a.s + sum_j ln 2cosh(b_j + sum_k W_kj s_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealRbm {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `n_visible x n_hidden`, row-major.
    pub w: Vec<f64>,
}

impl RealRbm {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        RealRbm { a: vec![0.0; n_visible], b: vec![0.0; n_hidden], w: vec![0.0; n_visible * n_hidden] }
    }

    pub fn random<R: Rng + ?Sized>(n_visible: usize, n_hidden: usize, std: f64, rng: &mut R) -> Self {
        RealRbm {
            a: gaussian_vec(n_visible, std, rng),
            b: gaussian_vec(n_hidden, std, rng),
            w: gaussian_vec(n_visible * n_hidden, std, rng),
        }
    }

    pub fn n_visible(&self) -> usize {
        self.a.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.b.len()
    }

    pub fn n_params(&self) -> usize {
        self.a.len() + self.b.len() + self.w.len()
    }

    pub fn check_shape(&self, n_visible: usize) -> Result<()> {
        if self.a.len() != n_visible {
            return Err(Error::ShapeMismatch { what: "visible biases", expected: n_visible, got: self.a.len() });
        }
        if self.w.len() != n_visible * self.b.len() {
            return Err(Error::ShapeMismatch { what: "weight matrix", expected: n_visible * self.b.len(), got: self.w.len() });
        }
        Ok(())
    }

    pub fn flat_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.a);
        out.extend_from_slice(&self.b);
        out.extend_from_slice(&self.w);
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let (nv, nh) = (self.a.len(), self.b.len());
        self.a.copy_from_slice(&flat[..nv]);
        self.b.copy_from_slice(&flat[nv..nv + nh]);
        self.w.copy_from_slice(&flat[nv + nh..nv + nh + nv * nh]);
    }

    /// Flat index of `W[i][j]`.
    pub fn weight_index(&self, i: usize, j: usize) -> usize {
        self.a.len() + self.b.len() + i * self.b.len() + j
    }

    #[inline]
    pub fn log_value(&self, s: &[f64]) -> f64 {
        let nh = self.b.len();
        let mut acc: f64 = self.a.iter().zip(s).map(|(a, s)| a * s).sum();
        for j in 0..nh {
            let mut theta = self.b[j];
            for (k, &sk) in s.iter().enumerate() {
                if sk != 0.0 {
                    theta += self.w[k * nh + j] * sk;
                }
            }
            acc += ln_2cosh(theta);
        }
        acc
    }

    pub fn log_values(&self, basis: &Basis) -> Vec<f64> {
        (0..basis.len()).map(|x| self.log_value(basis.visible(x))).collect()
    }

    /// `grad += sum_x coeff_x * d log f(x) / d theta`.
    pub fn backprop(&self, basis: &Basis, coeff: &[f64], grad: &mut [f64]) {
        let (nv, nh) = (self.a.len(), self.b.len());
        let mut tanh = vec![0.0; nh];
        for x in 0..basis.len() {
            let c = coeff[x];
            if c == 0.0 {
                continue;
            }
            let s = basis.visible(x);
            for j in 0..nh {
                let mut theta = self.b[j];
                for (k, &sk) in s.iter().enumerate() {
                    if sk != 0.0 {
                        theta += self.w[k * nh + j] * sk;
                    }
                }
                tanh[j] = c * theta.tanh();
            }
            for k in 0..nv {
                grad[k] += c * s[k];
            }
            for j in 0..nh {
                grad[nv + j] += tanh[j];
            }
            for (k, &sk) in s.iter().enumerate() {
                if sk == 0.0 {
                    continue;
                }
                let row = &mut grad[nv + nh + k * nh..nv + nh + (k + 1) * nh];
                for (g, t) in row.iter_mut().zip(&tanh) {
                    *g += t * sk;
                }
            }
        }
    }
}

/// Complex-valued RBM; `log f(s) = a.s + sum_j ln 2cosh(b_j + sum_k W_kj s_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexRbm {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    /// `n_visible x n_hidden`, row-major.
    pub w: Vec<C64>,
}

impl ComplexRbm {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        let z = C64::new(0.0, 0.0);
        ComplexRbm { a: vec![z; n_visible], b: vec![z; n_hidden], w: vec![z; n_visible * n_hidden] }
    }

    pub fn random<R: Rng + ?Sized>(n_visible: usize, n_hidden: usize, std: f64, rng: &mut R) -> Self {
        ComplexRbm {
            a: gaussian_cvec(n_visible, std, rng),
            b: gaussian_cvec(n_hidden, std, rng),
            w: gaussian_cvec(n_visible * n_hidden, std, rng),
        }
    }

    pub fn n_visible(&self) -> usize {
        self.a.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.b.len()
    }

    pub fn n_params(&self) -> usize {
        2 * (self.a.len() + self.b.len() + self.w.len())
    }

    pub fn check_shape(&self, n_visible: usize) -> Result<()> {
        if self.a.len() != n_visible {
            return Err(Error::ShapeMismatch { what: "visible biases", expected: n_visible, got: self.a.len() });
        }
        if self.w.len() != n_visible * self.b.len() {
            return Err(Error::ShapeMismatch { what: "weight matrix", expected: n_visible * self.b.len(), got: self.w.len() });
        }
        Ok(())
    }

    pub fn flat_into(&self, out: &mut Vec<f64>) {
        write_complex(&self.a, out);
        write_complex(&self.b, out);
        write_complex(&self.w, out);
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let (nv, nh) = (self.a.len(), self.b.len());
        read_complex(&flat[..2 * nv], &mut self.a);
        read_complex(&flat[2 * nv..2 * (nv + nh)], &mut self.b);
        read_complex(&flat[2 * (nv + nh)..2 * (nv + nh + nv * nh)], &mut self.w);
    }

    /// Flat indices of `Re W[i][j]` and `Im W[i][j]`.
    pub fn weight_indices(&self, i: usize, j: usize) -> [usize; 2] {
        let k = 2 * (self.a.len() + self.b.len() + i * self.b.len() + j);
        [k, k + 1]
    }

    #[inline]
    fn thetas(&self, s: &[f64], out: &mut [C64]) {
        let nh = self.b.len();
        for j in 0..nh {
            let mut theta = self.b[j];
            for (k, &sk) in s.iter().enumerate() {
                if sk != 0.0 {
                    theta += self.w[k * nh + j] * sk;
                }
            }
            out[j] = theta;
        }
    }

    /// `ln f(s)`; the hidden factors are `2 cosh`.
    pub fn log_value(&self, s: &[f64]) -> C64 {
        let mut theta = vec![C64::new(0.0, 0.0); self.b.len()];
        self.thetas(s, &mut theta);
        let mut acc: C64 = self.a.iter().zip(s).map(|(a, s)| a * s).sum();
        for t in theta {
            acc += ln_cosh(t) + LN_2;
        }
        acc
    }

    pub fn log_values(&self, basis: &Basis) -> Vec<C64> {
        (0..basis.len()).map(|x| self.log_value(basis.visible(x))).collect()
    }

    /// `grad += Re sum_x coeff_x * d log f(x) / d theta` for every real
    /// component `theta` (imaginary parts contribute `i * d/dz`).
    pub fn backprop(&self, basis: &Basis, coeff: &[C64], grad: &mut [f64]) {
        let (nv, nh) = (self.a.len(), self.b.len());
        let mut theta = vec![C64::new(0.0, 0.0); nh];
        let mut ct = vec![C64::new(0.0, 0.0); nh];
        let add = |g: &mut [f64], k: usize, v: C64| {
            g[2 * k] += v.re;
            g[2 * k + 1] -= v.im;
        };
        for x in 0..basis.len() {
            let c = coeff[x];
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let s = basis.visible(x);
            self.thetas(s, &mut theta);
            for j in 0..nh {
                ct[j] = c * tanh_c(theta[j]);
            }
            for k in 0..nv {
                add(grad, k, c * s[k]);
            }
            for j in 0..nh {
                add(grad, nv + j, ct[j]);
            }
            for (k, &sk) in s.iter().enumerate() {
                if sk == 0.0 {
                    continue;
                }
                for j in 0..nh {
                    add(grad, nv + nh + k * nh + j, ct[j] * sk);
                }
            }
        }
    }
}

/// Classical mixing layer `prod_p cosh(c_p + sum_k U_kp alpha_k + U_kp^* beta_k)`.
///
/// Writing `mu_p = c_p + sum_k Re U_kp (alpha_k + beta_k)` and
/// `psi_p = sum_k Im U_kp (alpha_k - beta_k)`, each factor is
/// `cosh(mu_p + i psi_p) = r_p * theta_p` with `r_p >= 0` and `|theta_p| = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingLayer {
    /// Real mixing biases.
    pub c: Vec<f64>,
    /// `n_visible x n_mixing`, row-major; `Re U = R`, `Im U = I`.
    pub u: Vec<C64>,
}

/// Per-element data of the mixing layer over all `(alpha, beta)` pairs.
#[derive(Clone, Debug)]
pub struct MixingEval {
    /// `sum_p ln cosh z_p(alpha, beta)`, row-major over pairs.
    pub log: Vec<C64>,
    /// `tanh z_p(alpha, beta)` at `pair * n_mixing + p`.
    pub tanh: Vec<C64>,
}

impl MixingLayer {
    pub fn zeros(n_visible: usize, n_mixing: usize) -> Self {
        MixingLayer { c: vec![0.0; n_mixing], u: vec![C64::new(0.0, 0.0); n_visible * n_mixing] }
    }

    pub fn random<R: Rng + ?Sized>(n_visible: usize, n_mixing: usize, std: f64, rng: &mut R) -> Self {
        MixingLayer { c: gaussian_vec(n_mixing, std, rng), u: gaussian_cvec(n_visible * n_mixing, std, rng) }
    }

    pub fn n_mixing(&self) -> usize {
        self.c.len()
    }

    pub fn n_params(&self) -> usize {
        self.c.len() + 2 * self.u.len()
    }

    pub fn check_shape(&self, n_visible: usize) -> Result<()> {
        if self.u.len() != n_visible * self.c.len() {
            return Err(Error::ShapeMismatch { what: "mixing weights", expected: n_visible * self.c.len(), got: self.u.len() });
        }
        Ok(())
    }

    pub fn flat_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.c);
        write_complex(&self.u, out);
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let nm = self.c.len();
        self.c.copy_from_slice(&flat[..nm]);
        read_complex(&flat[nm..nm + 2 * self.u.len()], &mut self.u);
    }

    /// `A_p(alpha) = sum_k U_kp alpha_k`, laid out `alpha * n_mixing + p`.
    fn projections(&self, basis: &Basis) -> Vec<C64> {
        let nm = self.c.len();
        let mut out = vec![C64::new(0.0, 0.0); basis.len() * nm];
        for x in 0..basis.len() {
            let s = basis.visible(x);
            let row = &mut out[x * nm..(x + 1) * nm];
            for (k, &sk) in s.iter().enumerate() {
                if sk == 0.0 {
                    continue;
                }
                for (p, r) in row.iter_mut().enumerate() {
                    *r += self.u[k * nm + p] * sk;
                }
            }
        }
        out
    }

    /// `z_p(alpha, beta) = mu_p + i psi_p` for every pair, laid out `(alpha * M + beta) * n_mixing + p`.
    pub fn arguments(&self, basis: &Basis) -> Vec<C64> {
        let (m, nm) = (basis.len(), self.c.len());
        let proj = self.projections(basis);
        let mut z = Vec::with_capacity(m * m * nm);
        for al in 0..m {
            for be in 0..m {
                for p in 0..nm {
                    z.push(self.c[p] + proj[al * nm + p] + proj[be * nm + p].conj());
                }
            }
        }
        z
    }

    /// Evaluation with the [`BRANCH_CUT_TOL`] zero guard.
    pub fn evaluate(&self, basis: &Basis) -> Result<MixingEval> {
        self.evaluate_with(basis, BRANCH_CUT_TOL)
    }

    /// Fails with `BranchCut` when some `|cosh z_p|` falls below `tol`.
    pub fn evaluate_with(&self, basis: &Basis, tol: f64) -> Result<MixingEval> {
        let (m, nm) = (basis.len(), self.c.len());
        let z = self.arguments(basis);
        let mut log = vec![C64::new(0.0, 0.0); m * m];
        let mut tanh = Vec::with_capacity(z.len());
        let floor = tol.ln();
        if nm > 0 {
            for (pair, zs) in z.chunks(nm).enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (p, &zp) in zs.iter().enumerate() {
                    let (lc, th) = ln_cosh_tanh(zp);
                    if lc.re < floor {
                        return Err(Error::BranchCut { unit: p, row: pair / m, col: pair % m });
                    }
                    acc += lc;
                    tanh.push(th);
                }
                log[pair] = acc;
            }
        }
        Ok(MixingEval { log, tanh })
    }

    /// Accumulates the mixing-parameter gradient from per-pair coefficients
    /// `K(alpha, beta)`: `d/dc_p -> tanh z_p`, `d/dR_kp -> (alpha_k + beta_k) tanh z_p`,
    /// `d/dI_kp -> i (alpha_k - beta_k) tanh z_p`.
    pub fn backprop(&self, basis: &Basis, eval: &MixingEval, coeff: &[C64], grad: &mut [f64]) {
        let (m, nm) = (basis.len(), self.c.len());
        if nm == 0 {
            return;
        }
        let nv = basis.n_visible();
        // row[alpha * nm + p] = sum_beta K T_p, col[beta * nm + p] = sum_alpha K T_p
        let mut row = vec![C64::new(0.0, 0.0); m * nm];
        let mut col = vec![C64::new(0.0, 0.0); m * nm];
        for al in 0..m {
            for be in 0..m {
                let pair = al * m + be;
                let k = coeff[pair];
                if k == C64::new(0.0, 0.0) {
                    continue;
                }
                let ts = &eval.tanh[pair * nm..(pair + 1) * nm];
                for p in 0..nm {
                    let e = k * ts[p];
                    row[al * nm + p] += e;
                    col[be * nm + p] += e;
                }
            }
        }
        for p in 0..nm {
            let total: C64 = (0..m).map(|al| row[al * nm + p]).sum();
            grad[p] += total.re;
        }
        for x in 0..m {
            let s = basis.visible(x);
            for k in 0..nv {
                let sk = s[k];
                if sk == 0.0 {
                    continue;
                }
                for p in 0..nm {
                    let (r, c) = (row[x * nm + p] * sk, col[x * nm + p] * sk);
                    let idx = nm + 2 * (k * nm + p);
                    grad[idx] += (r + c).re;
                    grad[idx + 1] -= (r - c).im;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_2cosh_matches_direct() {
        for &x in &[-30.0, -2.5, 0.0, 0.3, 4.0, 700.0] {
            let direct = (2.0 * f64::cosh(x)).ln();
            if direct.is_finite() {
                assert!((ln_2cosh(x) - direct).abs() < 1e-12, "{x}");
            }
        }
        assert!((ln_2cosh(1000.0) - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn ln_cosh_matches_direct() {
        for &(re, im) in &[(0.0, 0.0), (0.3, -1.2), (-2.0, 2.9), (5.0, 0.1), (-0.01, 1.5)] {
            let z = C64::new(re, im);
            let direct = z.cosh();
            let via = ln_cosh(z).exp();
            assert!((direct - via).norm() < 1e-12 * direct.norm().max(1.0), "{z}");
        }
    }

    #[test]
    fn fused_matches_separate() {
        for &(re, im) in &[(0.0, 0.0), (0.3, -1.2), (-2.0, 2.9), (9.0, 0.1), (-30.0, 1.0), (0.01, std::f64::consts::FRAC_PI_2 - 1e-4)] {
            let z = C64::new(re, im);
            let (l, t) = ln_cosh_tanh(z);
            assert!((l - ln_cosh(z)).norm() < 1e-9 * l.norm().max(1.0), "{z}");
            assert!((t - tanh_c(z)).norm() < 1e-9 * t.norm().max(1.0), "{z}");
        }
    }

    #[test]
    fn tanh_matches_direct() {
        for &(re, im) in &[(0.0, 0.2), (0.3, -1.2), (-2.0, 2.9), (9.0, 0.1)] {
            let z = C64::new(re, im);
            assert!((tanh_c(z) - z.tanh()).norm() < 1e-12);
        }
        assert_eq!(tanh_c(C64::new(800.0, 1.0)), C64::new(1.0, 0.0));
    }

    #[test]
    fn branch_cut_detected() {
        let basis = Basis::new(super::super::QuditEncoding::natural(2).unwrap(), 1);
        let mut mix = MixingLayer::zeros(1, 1);
        // z = i pi/2 on the (0, 1) pair: psi = I (alpha - beta) = 2 I
        mix.u[0] = C64::new(0.0, std::f64::consts::FRAC_PI_4);
        assert!(matches!(mix.evaluate(&basis), Err(Error::BranchCut { unit: 0, .. })));
    }
}

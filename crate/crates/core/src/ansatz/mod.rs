//! RBM parameterisations of pure and mixed qudit states.
//!
//! Every ansatz is evaluated exactly over the full basis, in the log domain.
//! Pure ansatzes produce `d^n` amplitudes; mixed ones produce the `d^n x d^n`
//! density-matrix elements vectorised row-major (`alpha * M + beta`).

mod encoding;
mod layers;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use encoding::{Basis, EncodingKind, QuditEncoding};
pub use layers::{ln_2cosh, ln_cosh, ln_cosh_tanh, tanh_c, ComplexRbm, MixingEval, MixingLayer, RealRbm, BRANCH_CUT_TOL, UNDERFLOW_TOL};

use crate::qmath::{ComplexMatrix, DensityMatrix, Projection};
use crate::separability::WeightMask;
use crate::{Error, Result, C64};

/// Standard deviation of the Gaussian initialisation (per real component).
pub const INIT_STD: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzKind {
    /// One complex RBM.
    PureComplex,
    /// Real amplitude RBM times `exp(i log phi(s))` from a real phase RBM.
    AmpPhase,
    /// Mixing layer (Hadamard) complex pure RBM density matrix.
    MixedNdm,
    /// Real amplitude and phase RBMs with a complex mixing layer.
    VecMixed,
    /// Mixing layer with complex visible biases only; fully separable.
    ClassicalMixer,
}

impl AnsatzKind {
    pub fn is_mixed(self) -> bool {
        matches!(self, AnsatzKind::MixedNdm | AnsatzKind::VecMixed | AnsatzKind::ClassicalMixer)
    }

    pub fn has_pure_layer(self) -> bool {
        self != AnsatzKind::ClassicalMixer
    }
}

/// Parameter sets; flat layouts follow the field order shown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Params {
    PureComplex { rbm: ComplexRbm },
    AmpPhase { amp: RealRbm, phase: RealRbm },
    MixedNdm { mixing: MixingLayer, pure: ComplexRbm },
    VecMixed { phase: RealRbm, amp: RealRbm, mixing: MixingLayer },
    ClassicalMixer { a: Vec<C64>, mixing: MixingLayer },
}

/// Layer sizes shared by every ansatz kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub kind: AnsatzKind,
    pub n_hidden: usize,
    pub n_mixing: usize,
}

impl Params {
    pub fn zeros(shape: Shape, n_visible: usize) -> Self {
        let (nv, nh, nm) = (n_visible, shape.n_hidden, shape.n_mixing);
        match shape.kind {
            AnsatzKind::PureComplex => Params::PureComplex { rbm: ComplexRbm::zeros(nv, nh) },
            AnsatzKind::AmpPhase => Params::AmpPhase { amp: RealRbm::zeros(nv, nh), phase: RealRbm::zeros(nv, nh) },
            AnsatzKind::MixedNdm => Params::MixedNdm { mixing: MixingLayer::zeros(nv, nm), pure: ComplexRbm::zeros(nv, nh) },
            AnsatzKind::VecMixed => Params::VecMixed {
                phase: RealRbm::zeros(nv, nh),
                amp: RealRbm::zeros(nv, nh),
                mixing: MixingLayer::zeros(nv, nm),
            },
            AnsatzKind::ClassicalMixer => {
                Params::ClassicalMixer { a: vec![C64::new(0.0, 0.0); nv], mixing: MixingLayer::zeros(nv, nm) }
            }
        }
    }

    pub fn random<R: Rng + ?Sized>(shape: Shape, n_visible: usize, std: f64, rng: &mut R) -> Self {
        let (nv, nh, nm) = (n_visible, shape.n_hidden, shape.n_mixing);
        match shape.kind {
            AnsatzKind::PureComplex => Params::PureComplex { rbm: ComplexRbm::random(nv, nh, std, rng) },
            AnsatzKind::AmpPhase => {
                let amp = RealRbm::random(nv, nh, std, rng);
                Params::AmpPhase { amp, phase: RealRbm::random(nv, nh, std, rng) }
            }
            AnsatzKind::MixedNdm => {
                let mixing = MixingLayer::random(nv, nm, std, rng);
                Params::MixedNdm { mixing, pure: ComplexRbm::random(nv, nh, std, rng) }
            }
            AnsatzKind::VecMixed => {
                let phase = RealRbm::random(nv, nh, std, rng);
                let amp = RealRbm::random(nv, nh, std, rng);
                Params::VecMixed { phase, amp, mixing: MixingLayer::random(nv, nm, std, rng) }
            }
            AnsatzKind::ClassicalMixer => {
                let normal = rand_distr::Normal::new(0.0, std).expect("finite standard deviation");
                let a = (0..nv).map(|_| C64::new(rng.sample(normal), rng.sample(normal))).collect();
                Params::ClassicalMixer { a, mixing: MixingLayer::random(nv, nm, std, rng) }
            }
        }
    }

    pub fn shape(&self) -> Shape {
        match self {
            Params::PureComplex { rbm } => Shape { kind: AnsatzKind::PureComplex, n_hidden: rbm.n_hidden(), n_mixing: 0 },
            Params::AmpPhase { amp, .. } => Shape { kind: AnsatzKind::AmpPhase, n_hidden: amp.n_hidden(), n_mixing: 0 },
            Params::MixedNdm { mixing, pure } => {
                Shape { kind: AnsatzKind::MixedNdm, n_hidden: pure.n_hidden(), n_mixing: mixing.n_mixing() }
            }
            Params::VecMixed { amp, mixing, .. } => {
                Shape { kind: AnsatzKind::VecMixed, n_hidden: amp.n_hidden(), n_mixing: mixing.n_mixing() }
            }
            Params::ClassicalMixer { mixing, .. } => {
                Shape { kind: AnsatzKind::ClassicalMixer, n_hidden: 0, n_mixing: mixing.n_mixing() }
            }
        }
    }

    pub fn kind(&self) -> AnsatzKind {
        self.shape().kind
    }

    pub fn check_shape(&self, n_visible: usize) -> Result<()> {
        match self {
            Params::PureComplex { rbm } => rbm.check_shape(n_visible),
            Params::AmpPhase { amp, phase } => {
                amp.check_shape(n_visible)?;
                phase.check_shape(n_visible)?;
                if amp.n_hidden() != phase.n_hidden() {
                    return Err(Error::ShapeMismatch { what: "phase hidden units", expected: amp.n_hidden(), got: phase.n_hidden() });
                }
                Ok(())
            }
            Params::MixedNdm { mixing, pure } => {
                mixing.check_shape(n_visible)?;
                pure.check_shape(n_visible)
            }
            Params::VecMixed { phase, amp, mixing } => {
                phase.check_shape(n_visible)?;
                amp.check_shape(n_visible)?;
                mixing.check_shape(n_visible)?;
                if amp.n_hidden() != phase.n_hidden() {
                    return Err(Error::ShapeMismatch { what: "phase hidden units", expected: amp.n_hidden(), got: phase.n_hidden() });
                }
                Ok(())
            }
            Params::ClassicalMixer { a, mixing } => {
                if a.len() != n_visible {
                    return Err(Error::ShapeMismatch { what: "visible biases", expected: n_visible, got: a.len() });
                }
                mixing.check_shape(n_visible)
            }
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            Params::PureComplex { rbm } => rbm.n_params(),
            Params::AmpPhase { amp, phase } => amp.n_params() + phase.n_params(),
            Params::MixedNdm { mixing, pure } => mixing.n_params() + pure.n_params(),
            Params::VecMixed { phase, amp, mixing } => phase.n_params() + amp.n_params() + mixing.n_params(),
            Params::ClassicalMixer { a, mixing } => 2 * a.len() + mixing.n_params(),
        }
    }

    /// Flat real vector; complex values interleaved `[re, im]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        match self {
            Params::PureComplex { rbm } => rbm.flat_into(&mut out),
            Params::AmpPhase { amp, phase } => {
                amp.flat_into(&mut out);
                phase.flat_into(&mut out);
            }
            Params::MixedNdm { mixing, pure } => {
                mixing.flat_into(&mut out);
                pure.flat_into(&mut out);
            }
            Params::VecMixed { phase, amp, mixing } => {
                phase.flat_into(&mut out);
                amp.flat_into(&mut out);
                mixing.flat_into(&mut out);
            }
            Params::ClassicalMixer { a, mixing } => {
                for z in a {
                    out.push(z.re);
                    out.push(z.im);
                }
                mixing.flat_into(&mut out);
            }
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::ShapeMismatch { what: "flat parameter vector", expected: self.n_params(), got: flat.len() });
        }
        match self {
            Params::PureComplex { rbm } => rbm.set_flat(flat),
            Params::AmpPhase { amp, phase } => {
                let k = amp.n_params();
                amp.set_flat(&flat[..k]);
                phase.set_flat(&flat[k..]);
            }
            Params::MixedNdm { mixing, pure } => {
                let k = mixing.n_params();
                mixing.set_flat(&flat[..k]);
                pure.set_flat(&flat[k..]);
            }
            Params::VecMixed { phase, amp, mixing } => {
                let (k1, k2) = (phase.n_params(), phase.n_params() + amp.n_params());
                phase.set_flat(&flat[..k1]);
                amp.set_flat(&flat[k1..k2]);
                mixing.set_flat(&flat[k2..]);
            }
            Params::ClassicalMixer { a, mixing } => {
                for (k, z) in a.iter_mut().enumerate() {
                    *z = C64::new(flat[2 * k], flat[2 * k + 1]);
                }
                mixing.set_flat(&flat[2 * a.len()..]);
            }
        }
        Ok(())
    }

    /// Flat indices of every pure-layer weight blocked by `mask`.
    pub fn masked_indices(&self, mask: &WeightMask) -> Result<Vec<usize>> {
        let shape = self.shape();
        if shape.kind == AnsatzKind::ClassicalMixer {
            return Ok(Vec::new());
        }
        if mask.n_hidden != shape.n_hidden {
            return Err(Error::ShapeMismatch { what: "mask hidden units", expected: shape.n_hidden, got: mask.n_hidden });
        }
        let mut out = Vec::new();
        let blocked = (0..mask.n_visible).flat_map(|i| (0..mask.n_hidden).map(move |j| (i, j))).filter(|&(i, j)| !mask.allowed(i, j));
        for (i, j) in blocked {
            match self {
                Params::PureComplex { rbm } => out.extend(rbm.weight_indices(i, j)),
                Params::AmpPhase { amp, phase } => {
                    out.push(amp.weight_index(i, j));
                    out.push(amp.n_params() + phase.weight_index(i, j));
                }
                Params::MixedNdm { mixing, pure } => {
                    out.extend(pure.weight_indices(i, j).map(|k| k + mixing.n_params()));
                }
                Params::VecMixed { phase, amp, .. } => {
                    out.push(phase.weight_index(i, j));
                    out.push(phase.n_params() + amp.weight_index(i, j));
                }
                Params::ClassicalMixer { .. } => unreachable!(),
            }
        }
        out.sort_unstable();
        Ok(out)
    }
}

/// Row and column sums of a pair coefficient array: `(sum_beta K, sum_alpha K)`.
fn marginals(coeff: &[C64], m: usize) -> (Vec<C64>, Vec<C64>) {
    let mut row = vec![C64::new(0.0, 0.0); m];
    let mut col = vec![C64::new(0.0, 0.0); m];
    for al in 0..m {
        for be in 0..m {
            let k = coeff[al * m + be];
            row[al] += k;
            col[be] += k;
        }
    }
    (row, col)
}

/// Result of a forward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    pub logs: Vec<C64>,
    mixing: Option<MixingEval>,
}

impl Forward {
    /// Output rescaled so that the largest modulus is 1.
    pub fn values(&self) -> Vec<C64> {
        let top = self.logs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        self.logs.iter().map(|z| (z - top).exp()).collect()
    }

    fn mixing_eval(&self) -> Result<&MixingEval> {
        self.mixing
            .as_ref()
            .ok_or(Error::BadParam { name: "forward", value: f64::NAN, reason: "forward pass has no mixing layer" })
    }
}

/// Log-domain parts of the vectorised mixed form: element
/// `exp(log_gamma + log_r + i (phase_phi + phase_theta))`.
#[derive(Clone, Debug)]
pub struct VecMixedParts {
    pub log_gamma: Vec<f64>,
    pub phase_phi: Vec<f64>,
    pub log_r: Vec<f64>,
    pub phase_theta: Vec<f64>,
}

/// A parameter set bound to a basis, optionally with frozen (masked) weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    basis: Basis,
    params: Params,
    /// Flat indices held at exactly zero.
    frozen: Vec<usize>,
}

impl Ansatz {
    pub fn new(basis: Basis, params: Params) -> Result<Self> {
        params.check_shape(basis.n_visible())?;
        Ok(Ansatz { basis, params, frozen: Vec::new() })
    }

    pub fn zeros(basis: Basis, shape: Shape) -> Self {
        let params = Params::zeros(shape, basis.n_visible());
        Ansatz { basis, params, frozen: Vec::new() }
    }

    pub fn random<R: Rng + ?Sized>(basis: Basis, shape: Shape, rng: &mut R) -> Self {
        let params = Params::random(shape, basis.n_visible(), INIT_STD, rng);
        Ansatz { basis, params, frozen: Vec::new() }
    }

    /// Attaches a weight mask to the pure layer(s) and zeroes the blocked weights.
    pub fn with_mask(mut self, mask: &WeightMask) -> Result<Self> {
        if mask.n_visible != self.basis.n_visible() {
            return Err(Error::ShapeMismatch { what: "mask visible units", expected: self.basis.n_visible(), got: mask.n_visible });
        }
        self.frozen = self.params.masked_indices(mask)?;
        let mut flat = self.params.to_flat();
        for &k in &self.frozen {
            flat[k] = 0.0;
        }
        self.params.set_flat(&flat)?;
        Ok(self)
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn kind(&self) -> AnsatzKind {
        self.params.kind()
    }

    pub fn shape(&self) -> Shape {
        self.params.shape()
    }

    pub fn frozen(&self) -> &[usize] {
        &self.frozen
    }

    pub fn is_mixed(&self) -> bool {
        self.kind().is_mixed()
    }

    pub fn n_params(&self) -> usize {
        self.params.n_params()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.params.to_flat()
    }

    /// Replaces all parameters; frozen entries must be zero.
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if let Some(&k) = self.frozen.iter().find(|&&k| flat.get(k).is_some_and(|v| *v != 0.0)) {
            return Err(Error::InvariantViolation { invariant: "mask", detail: format!("masked parameter {k} is non-zero") });
        }
        self.params.set_flat(flat)
    }

    /// Copies parameters from another ansatz of the same shape, re-zeroing this ansatz's frozen entries.
    pub fn load_params(&mut self, other: &Params) -> Result<()> {
        let mut flat = other.to_flat();
        if flat.len() != self.n_params() {
            return Err(Error::ShapeMismatch { what: "flat parameter vector", expected: self.n_params(), got: flat.len() });
        }
        for &k in &self.frozen {
            flat[k] = 0.0;
        }
        self.params.set_flat(&flat)
    }

    /// Number of entries in the (vectorised) output: `M` or `M^2`.
    pub fn output_len(&self) -> usize {
        let m = self.basis.len();
        if self.is_mixed() {
            m * m
        } else {
            m
        }
    }

    /// Logarithm of every unnormalised output element.
    pub fn log_values(&self) -> Result<Vec<C64>> {
        Ok(self.forward()?.logs)
    }

    /// Log values plus the mixing-layer intermediates backprop reuses.
    pub fn forward(&self) -> Result<Forward> {
        let b = &self.basis;
        let m = b.len();
        let (out, mixing) = match &self.params {
            Params::PureComplex { rbm } => (rbm.log_values(b), None),
            Params::AmpPhase { amp, phase } => {
                let (la, lp) = (amp.log_values(b), phase.log_values(b));
                (la.iter().zip(&lp).map(|(&a, &p)| C64::new(a, p)).collect(), None)
            }
            Params::MixedNdm { mixing, pure } => {
                let lp = pure.log_values(b);
                let mix = mixing.evaluate_with(b, UNDERFLOW_TOL)?;
                (pairwise(m, |al, be| lp[al] + lp[be].conj() + mix.log[al * m + be]), Some(mix))
            }
            Params::VecMixed { phase, amp, mixing } => {
                let (la, lp) = (amp.log_values(b), phase.log_values(b));
                let mix = mixing.evaluate(b)?;
                let out = pairwise(m, |al, be| C64::new(la[al] + la[be], lp[al] - lp[be]) + mix.log[al * m + be]);
                (out, Some(mix))
            }
            Params::ClassicalMixer { a, mixing } => {
                let la: Vec<C64> = (0..m).map(|x| a.iter().zip(b.visible(x)).map(|(a, s)| a * s).sum()).collect();
                let mix = mixing.evaluate_with(b, UNDERFLOW_TOL)?;
                (pairwise(m, |al, be| la[al] + la[be].conj() + mix.log[al * m + be]), Some(mix))
            }
        };
        check_logs(&out)?;
        Ok(Forward { logs: out, mixing })
    }

    /// Phase and amplitude parts of the vectorised mixed ansatz.
    pub fn vec_mixed_parts(&self) -> Result<VecMixedParts> {
        let Params::VecMixed { phase, amp, mixing } = &self.params else {
            return Err(Error::BadParam { name: "ansatz", value: f64::NAN, reason: "not a vectorised mixed ansatz" });
        };
        let b = &self.basis;
        let m = b.len();
        let (la, lp) = (amp.log_values(b), phase.log_values(b));
        let mix = mixing.evaluate(b)?;
        let log_gamma = pairwise(m, |al, be| la[al] + la[be]);
        let phase_phi = pairwise(m, |al, be| lp[al] - lp[be]);
        Ok(VecMixedParts {
            log_gamma,
            phase_phi,
            log_r: mix.log.iter().map(|z| z.re).collect(),
            phase_theta: mix.log.iter().map(|z| z.im).collect(),
        })
    }

    /// Unnormalised output rescaled so that the largest modulus is 1.
    pub fn values(&self) -> Result<Vec<C64>> {
        Ok(self.forward()?.values())
    }

    /// Normalised state vector of a pure ansatz.
    pub fn state_vector(&self) -> Result<Vec<C64>> {
        if self.is_mixed() {
            return Err(Error::BadParam { name: "ansatz", value: f64::NAN, reason: "mixed ansatz has no state vector" });
        }
        let v = self.values()?;
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::ZeroNorm);
        }
        Ok(v.iter().map(|z| z / norm).collect())
    }

    /// Unnormalised density matrix (`|psi><psi|` for pure kinds).
    pub fn raw_matrix(&self) -> Result<ComplexMatrix> {
        let v = self.values()?;
        if self.is_mixed() {
            ComplexMatrix::from_row_major(v)
        } else {
            Ok(ComplexMatrix::outer(&v))
        }
    }

    /// Trace-normalised density matrix, validated against the usual invariants.
    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        let raw = self.raw_matrix()?;
        let tr = raw.trace().re;
        if tr.abs() < 1e-300 {
            return Err(Error::ZeroTrace(tr));
        }
        DensityMatrix::new(raw.scale_real(1.0 / tr), self.basis.dims())
    }

    /// Hermitised, PSD-clipped, trace-normalised state plus what was changed.
    pub fn projected_density_matrix(&self) -> Result<(DensityMatrix, Projection)> {
        DensityMatrix::project(&self.raw_matrix()?, self.basis.dims())
    }

    /// `grad_theta = Re sum_x coeff_x d log v_x / d theta` for every flat
    /// parameter; frozen entries are left at zero.
    pub fn backprop(&self, coeff: &[C64]) -> Result<Vec<f64>> {
        self.backprop_with(&self.forward()?, coeff)
    }

    /// [`Ansatz::backprop`] reusing a forward pass at the current parameters.
    pub fn backprop_with(&self, fwd: &Forward, coeff: &[C64]) -> Result<Vec<f64>> {
        if coeff.len() != self.output_len() {
            return Err(Error::ShapeMismatch { what: "coefficient vector", expected: self.output_len(), got: coeff.len() });
        }
        let b = &self.basis;
        let m = b.len();
        let mut grad = vec![0.0; self.n_params()];
        match &self.params {
            Params::PureComplex { rbm } => rbm.backprop(b, coeff, &mut grad),
            Params::AmpPhase { amp, phase } => {
                let re: Vec<f64> = coeff.iter().map(|k| k.re).collect();
                let im: Vec<f64> = coeff.iter().map(|k| -k.im).collect();
                let (ga, gp) = grad.split_at_mut(amp.n_params());
                amp.backprop(b, &re, ga);
                phase.backprop(b, &im, gp);
            }
            Params::MixedNdm { mixing, pure } => {
                let (gm, gp) = grad.split_at_mut(mixing.n_params());
                mixing.backprop(b, fwd.mixing_eval()?, coeff, gm);
                let (row, col) = marginals(coeff, m);
                let c: Vec<C64> = row.iter().zip(&col).map(|(r, c)| r + c.conj()).collect();
                pure.backprop(b, &c, gp);
            }
            Params::VecMixed { phase, amp, mixing } => {
                let (row, col) = marginals(coeff, m);
                let amp_c: Vec<f64> = row.iter().zip(&col).map(|(r, c)| r.re + c.re).collect();
                let phase_c: Vec<f64> = row.iter().zip(&col).map(|(r, c)| c.im - r.im).collect();
                let (gp, rest) = grad.split_at_mut(phase.n_params());
                let (ga, gm) = rest.split_at_mut(amp.n_params());
                phase.backprop(b, &phase_c, gp);
                amp.backprop(b, &amp_c, ga);
                mixing.backprop(b, fwd.mixing_eval()?, coeff, gm);
            }
            Params::ClassicalMixer { a, mixing } => {
                let (ga, gm) = grad.split_at_mut(2 * a.len());
                let (row, col) = marginals(coeff, m);
                for x in 0..m {
                    let c = row[x] + col[x].conj();
                    for (k, &s) in b.visible(x).iter().enumerate() {
                        ga[2 * k] += (c * s).re;
                        ga[2 * k + 1] -= (c * s).im;
                    }
                }
                mixing.backprop(b, fwd.mixing_eval()?, coeff, gm);
            }
        }
        for &k in &self.frozen {
            grad[k] = 0.0;
        }
        Ok(grad)
    }

    /// Serialisable description of this ansatz.
    pub fn to_document(&self) -> AnsatzDocument {
        let shape = self.shape();
        AnsatzDocument {
            ansatz: shape.kind,
            n_v: self.basis.n_qudits(),
            n_h: shape.n_hidden,
            n_m: shape.n_mixing,
            d: self.basis.d(),
            encoding: self.basis.encoding().kind,
            params: self.flat(),
            frozen: self.frozen.clone(),
        }
    }

    pub fn from_document(doc: &AnsatzDocument) -> Result<Self> {
        let enc = QuditEncoding::new(doc.encoding, doc.d)?;
        let basis = Basis::new(enc, doc.n_v);
        let shape = Shape { kind: doc.ansatz, n_hidden: doc.n_h, n_mixing: doc.n_m };
        let mut out = Ansatz::zeros(basis, shape);
        if let Some(&k) = doc.frozen.iter().find(|&&k| k >= out.n_params()) {
            return Err(Error::ShapeMismatch { what: "frozen index", expected: out.n_params(), got: k });
        }
        out.frozen = doc.frozen.clone();
        out.set_flat(&doc.params)?;
        Ok(out)
    }
}

fn check_logs(logs: &[C64]) -> Result<()> {
    match logs.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        Some(k) => Err(Error::NonFinite { row: k, col: 0 }),
        None => Ok(()),
    }
}

fn pairwise<T>(m: usize, f: impl Fn(usize, usize) -> T) -> Vec<T> {
    let mut out = Vec::with_capacity(m * m);
    for al in 0..m {
        for be in 0..m {
            out.push(f(al, be));
        }
    }
    out
}

/// JSON form: `params` is the flat real vector with complex values stored as
/// consecutive `[re, im]` pairs, in the field order of [`Params`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzDocument {
    pub ansatz: AnsatzKind,
    /// Number of qudits.
    pub n_v: usize,
    pub n_h: usize,
    pub n_m: usize,
    pub d: usize,
    pub encoding: EncodingKind,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frozen: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{min_pt_eigenvalue, ComplexMatrix};
    use crate::separability::{default_mask, PartitionSet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubits(n: usize) -> Basis {
        Basis::new(QuditEncoding::natural(2).unwrap(), n)
    }

    fn shape(kind: AnsatzKind, n_hidden: usize, n_mixing: usize) -> Shape {
        Shape { kind, n_hidden, n_mixing }
    }

    fn random(basis: Basis, s: Shape, std: f64, seed: u64) -> Ansatz {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = Params::random(s, basis.n_visible(), std, &mut rng);
        Ansatz::new(basis, params).unwrap()
    }

    #[test]
    fn zero_parameters_give_uniform_amplitudes() {
        let a = Ansatz::zeros(qubits(3), shape(AnsatzKind::PureComplex, 4, 0));
        let Params::PureComplex { rbm } = a.params() else { unreachable!() };
        for x in 0..8 {
            let v = rbm.log_value(a.basis().visible(x)).exp();
            assert!((v - C64::new(16.0, 0.0)).norm() < 1e-12);
        }
        let psi = a.state_vector().unwrap();
        assert!(psi.iter().all(|z| (z.re - 8f64.sqrt().recip()).abs() < 1e-15));
    }

    #[test]
    fn cosh_is_even_in_the_visible_unit() {
        let mut rbm = ComplexRbm::zeros(1, 1);
        rbm.w[0] = C64::new(0.7, 0.0);
        let ratio = (rbm.log_value(&[1.0]) - rbm.log_value(&[-1.0])).exp();
        assert!((ratio - 1.0).norm() < 1e-15);
    }

    #[test]
    fn mixed_zero_parameters_give_all_ones() {
        for kind in [AnsatzKind::MixedNdm, AnsatzKind::VecMixed, AnsatzKind::ClassicalMixer] {
            let a = Ansatz::zeros(qubits(2), shape(kind, 2, 3));
            let v = a.values().unwrap();
            assert!(v.iter().all(|z| (z - 1.0).norm() < 1e-15), "{kind:?}");
        }
    }

    #[test]
    fn ndm_is_hermitian_and_positive() {
        for seed in 0..200 {
            let a = random(qubits(2), shape(AnsatzKind::MixedNdm, 3, 2), 0.8, seed);
            let raw = a.raw_matrix().unwrap();
            assert!(raw.hermitian_deviation() <= 1e-10 * raw.frobenius_norm());
            let spec = crate::qmath::hermitian_eig(&raw).unwrap();
            let tr = raw.trace().re;
            assert!(spec.min() >= -1e-9 * tr, "seed {seed}: {}", spec.min());
        }
    }

    #[test]
    fn ndm_without_mixing_is_rank_one() {
        let a = random(qubits(2), shape(AnsatzKind::MixedNdm, 3, 0), 0.5, 7);
        let rho = a.density_matrix().unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-10);
        let Params::MixedNdm { pure, .. } = a.params() else { unreachable!() };
        let pure = Ansatz::new(qubits(2), Params::PureComplex { rbm: pure.clone() }).unwrap();
        let psi = pure.state_vector().unwrap();
        let proj = ComplexMatrix::outer(&psi);
        assert!(proj.max_abs_diff(rho.matrix()) < 1e-12);
    }

    #[test]
    fn vec_mixed_parts_and_hermiticity() {
        for seed in 0..200 {
            let a = random(qubits(2), shape(AnsatzKind::VecMixed, 2, 2), 0.6, seed);
            let raw = a.raw_matrix().unwrap();
            assert!(raw.hermitian_deviation() <= 1e-8 * raw.frobenius_norm(), "seed {seed}");
        }
        let a = random(qubits(2), shape(AnsatzKind::VecMixed, 2, 2), 0.6, 3);
        let parts = a.vec_mixed_parts().unwrap();
        for x in 0..4 {
            let k = x * 4 + x;
            assert_eq!(parts.phase_phi[k], 0.0);
            assert!(parts.phase_theta[k].abs() < 1e-15);
        }
        // no imaginary mixing weights: psi_p = 0, so the mixing phase vanishes
        let Params::VecMixed { phase, amp, mut mixing } = a.params().clone() else { unreachable!() };
        mixing.u.iter_mut().for_each(|u| u.im = 0.0);
        let b = Ansatz::new(qubits(2), Params::VecMixed { phase, amp, mixing }).unwrap();
        assert!(b.vec_mixed_parts().unwrap().phase_theta.iter().all(|t| t.abs() < 1e-15));
    }

    #[test]
    fn vec_mixed_without_mixing_is_pure_amp_phase() {
        let a = random(qubits(2), shape(AnsatzKind::VecMixed, 3, 0), 0.5, 11);
        let Params::VecMixed { phase, amp, .. } = a.params().clone() else { unreachable!() };
        let pure = Ansatz::new(qubits(2), Params::AmpPhase { amp, phase }).unwrap();
        let psi = pure.state_vector().unwrap();
        let rho = a.density_matrix().unwrap();
        assert!(ComplexMatrix::outer(&psi).max_abs_diff(rho.matrix()) < 1e-12);
    }

    #[test]
    fn classical_mixer_is_ppt() {
        for seed in 0..50 {
            let a = random(qubits(2), shape(AnsatzKind::ClassicalMixer, 0, 3), 0.8, seed);
            let rho = a.density_matrix().unwrap();
            assert!(min_pt_eigenvalue(&rho, 0).unwrap() >= -1e-10, "seed {seed}");
            let diag: Vec<f64> = (0..4).map(|i| rho.matrix()[(i, i)].re).collect();
            assert!(diag.iter().all(|&p| p >= 0.0));
            assert!((diag.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn amp_phase_reproduces_a_complex_qubit_state() {
        let c = random(qubits(1), shape(AnsatzKind::PureComplex, 2, 0), 0.9, 5);
        let psi = c.state_vector().unwrap();
        let (up, down) = (psi[0], psi[1]);
        // s = +1 for level 0, -1 for level 1
        let mut amp = RealRbm::zeros(1, 0);
        let mut phase = RealRbm::zeros(1, 0);
        amp.a[0] = 0.5 * (up.norm().ln() - down.norm().ln());
        phase.a[0] = 0.5 * (up.arg() - down.arg());
        let ap = Ansatz::new(qubits(1), Params::AmpPhase { amp, phase }).unwrap();
        let phi = ap.state_vector().unwrap();
        let overlap: C64 = phi.iter().zip(&psi).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bell_parameterisation_matches_basis_order() {
        // a single hidden unit with large weights: cosh(w (s1 + s2)) peaks on |00> and |11>
        let mut rbm = ComplexRbm::zeros(2, 1);
        rbm.w = vec![C64::new(20.0, 0.0); 2];
        let a = Ansatz::new(qubits(2), Params::PureComplex { rbm }).unwrap();
        let psi = a.state_vector().unwrap();
        let bell = crate::states::bell_vector(2);
        let overlap: C64 = psi.iter().zip(&bell).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn masked_product_state_factorises() {
        let basis = qubits(2);
        let mask = default_mask(&PartitionSet::fully_separable(2), &basis, 4).unwrap();
        let a = random(basis, shape(AnsatzKind::PureComplex, 4, 0), 1.0, 9).with_mask(&mask).unwrap();
        let v = a.state_vector().unwrap();
        assert!((v[0] * v[3] - v[1] * v[2]).norm() <= 1e-12);
        assert_eq!(a.frozen().len(), 2 * mask.n_blocked());
    }

    #[test]
    fn document_round_trip() {
        let basis = Basis::new(QuditEncoding::natural(3).unwrap(), 2);
        let mask = default_mask(&PartitionSet::fully_separable(2), &basis, 2).unwrap();
        let a = random(basis, shape(AnsatzKind::MixedNdm, 2, 2), 0.3, 1).with_mask(&mask).unwrap();
        let json = serde_json::to_string(&a.to_document()).unwrap();
        let back = Ansatz::from_document(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, a);
    }
}

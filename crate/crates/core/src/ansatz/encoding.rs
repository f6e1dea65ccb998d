use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingKind {
    /// `ceil(log2 d)` units per qudit with values in {-1, +1}; needs `d = 2^r`.
    Binary,
    /// `d` indicator units per qudit with values in {0, 1}.
    OneHot,
}

/// How one qudit level maps onto a group of visible units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuditEncoding {
    pub kind: EncodingKind,
    pub d: usize,
}

impl QuditEncoding {
    pub fn new(kind: EncodingKind, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::BadParam { name: "d", value: d as f64, reason: "local dimension must be at least 2" });
        }
        if kind == EncodingKind::Binary && !d.is_power_of_two() {
            return Err(Error::BadParam { name: "d", value: d as f64, reason: "binary encoding needs a power of two" });
        }
        Ok(QuditEncoding { kind, d })
    }

    /// Binary for powers of two, one-hot otherwise.
    pub fn natural(d: usize) -> Result<Self> {
        if d.is_power_of_two() {
            Self::new(EncodingKind::Binary, d)
        } else {
            Self::new(EncodingKind::OneHot, d)
        }
    }

    pub fn width(&self) -> usize {
        match self.kind {
            EncodingKind::Binary => self.d.trailing_zeros() as usize,
            EncodingKind::OneHot => self.d,
        }
    }

    /// Visible-unit values for level `s`; binary digits are most significant
    /// first with bit 0 -> +1 and bit 1 -> -1.
    pub fn encode(&self, s: usize) -> Vec<f64> {
        assert!(s < self.d, "level {s} out of range for d = {}", self.d);
        match self.kind {
            EncodingKind::Binary => {
                let w = self.width();
                (0..w).map(|b| if (s >> (w - 1 - b)) & 1 == 0 { 1.0 } else { -1.0 }).collect()
            }
            EncodingKind::OneHot => (0..self.d).map(|k| if k == s { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn decode(&self, units: &[f64]) -> Option<usize> {
        if units.len() != self.width() {
            return None;
        }
        match self.kind {
            EncodingKind::Binary => units.iter().try_fold(0usize, |acc, &u| match u {
                1.0 => Some(acc << 1),
                -1.0 => Some((acc << 1) | 1),
                _ => None,
            }),
            EncodingKind::OneHot => {
                let hot: Vec<usize> = units.iter().enumerate().filter(|(_, &u)| u == 1.0).map(|(k, _)| k).collect();
                let rest_zero = units.iter().all(|&u| u == 0.0 || u == 1.0);
                (hot.len() == 1 && rest_zero).then(|| hot[0])
            }
        }
    }
}

/// The full computational basis of `n` qudits with its visible-layer encoding.
///
/// Label `x` corresponds to digits `(s_1, ..., s_n)` with the leftmost qudit
/// most significant; visible units are laid out qudit by qudit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    encoding: QuditEncoding,
    n_qudits: usize,
    units: Vec<f64>,
}

impl Basis {
    pub fn new(encoding: QuditEncoding, n_qudits: usize) -> Self {
        assert!(n_qudits >= 1, "need at least one qudit");
        let d = encoding.d;
        let size = d.pow(n_qudits as u32);
        let codes: Vec<Vec<f64>> = (0..d).map(|s| encoding.encode(s)).collect();
        let mut units = Vec::with_capacity(size * n_qudits * encoding.width());
        for x in 0..size {
            for q in 0..n_qudits {
                let s = (x / d.pow((n_qudits - 1 - q) as u32)) % d;
                units.extend_from_slice(&codes[s]);
            }
        }
        Basis { encoding, n_qudits, units }
    }

    pub fn encoding(&self) -> QuditEncoding {
        self.encoding
    }

    pub fn d(&self) -> usize {
        self.encoding.d
    }

    pub fn n_qudits(&self) -> usize {
        self.n_qudits
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.encoding.d; self.n_qudits]
    }

    /// Number of basis labels, `d^n`.
    pub fn len(&self) -> usize {
        self.units.len() / self.n_visible()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Number of visible units, `n * width`.
    pub fn n_visible(&self) -> usize {
        self.n_qudits * self.encoding.width()
    }

    #[inline]
    pub fn visible(&self, x: usize) -> &[f64] {
        let nv = self.n_visible();
        &self.units[x * nv..(x + 1) * nv]
    }

    /// The qudit a visible unit belongs to.
    pub fn qudit_of_unit(&self, unit: usize) -> usize {
        unit / self.encoding.width()
    }

    /// Digits of label `x`, leftmost qudit first.
    pub fn digits(&self, x: usize) -> Vec<usize> {
        let d = self.encoding.d;
        (0..self.n_qudits).map(|q| (x / d.pow((self.n_qudits - 1 - q) as u32)) % d).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn onehot_example() {
        let e = QuditEncoding::new(EncodingKind::OneHot, 3).unwrap();
        assert_eq!(e.encode(2), vec![0.0, 0.0, 1.0]);
        assert_eq!(e.width(), 3);
    }

    #[test]
    fn binary_widths_and_values() {
        let e = QuditEncoding::new(EncodingKind::Binary, 4).unwrap();
        assert_eq!(e.width(), 2);
        assert_eq!(e.encode(0), vec![1.0, 1.0]);
        assert_eq!(e.encode(2), vec![-1.0, 1.0]);
        assert_eq!(QuditEncoding::new(EncodingKind::Binary, 2).unwrap().encode(1), vec![-1.0]);
        assert!(QuditEncoding::new(EncodingKind::Binary, 3).is_err());
        assert!(QuditEncoding::new(EncodingKind::OneHot, 1).is_err());
    }

    #[test]
    fn encode_decode_round_trip() {
        for kind in [EncodingKind::Binary, EncodingKind::OneHot] {
            for d in [2, 4, 8] {
                let e = QuditEncoding::new(kind, d).unwrap();
                for s in 0..d {
                    assert_eq!(e.decode(&e.encode(s)), Some(s));
                }
            }
        }
        let e = QuditEncoding::new(EncodingKind::OneHot, 5).unwrap();
        for s in 0..5 {
            assert_eq!(e.decode(&e.encode(s)), Some(s));
        }
        assert_eq!(e.decode(&[1.0, 1.0, 0.0, 0.0, 0.0]), None);
    }

    #[test]
    fn basis_order_is_big_endian() {
        let b = Basis::new(QuditEncoding::natural(3).unwrap(), 2);
        assert_eq!(b.len(), 9);
        assert_eq!(b.n_visible(), 6);
        // label 5 = (1, 2)
        assert_eq!(b.digits(5), vec![1, 2]);
        assert_eq!(b.visible(5), &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(b.qudit_of_unit(4), 1);
    }
}

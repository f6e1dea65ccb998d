use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { dim, data }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    /// Row-major entries; length must be a perfect square.
    pub fn from_row_major(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() || dim == 0 {
            return Err(Error::ShapeMismatch { what: "row-major matrix data", expected: dim * dim, got: data.len() });
        }
        Ok(ComplexMatrix { dim, data })
    }

    /// `|v><v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            Some(k) => Err(Error::NonFinite { row: k / self.dim, col: k % self.dim }),
            None => Ok(()),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `||H - H^dagger||_F`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `(H + H^dagger) / 2`.
    pub fn hermitised(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        ComplexMatrix { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimMismatch { left: self.dim, right: rhs.dim });
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `<v| M |v>`.
    pub fn expectation(&self, v: &[C64]) -> Result<C64> {
        if v.len() != self.dim {
            return Err(Error::DimMismatch { left: self.dim, right: v.len() });
        }
        let n = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..n {
                row += self.data[i * n + j] * v[j];
            }
            acc += v[i].conj() * row;
        }
        Ok(acc)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix addition");
        ComplexMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix subtraction");
        ComplexMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs).expect("dimension mismatch in matrix product")
    }
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim(), b.dim());
    ComplexMatrix::from_fn(na * nb, |i, j| a[(i / nb, j / nb)] * b[(i % nb, j % nb)])
}

/// Element-wise (Schur) product.
pub fn hadamard(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(ComplexMatrix {
        dim: a.dim(),
        data: a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect(),
    })
}

/// Row-major vectorisation: element `(i, j)` lands at `i * dim + j`.
pub fn vectorise(m: &ComplexMatrix) -> Vec<C64> {
    m.data.clone()
}

pub fn devectorise(v: &[C64], dim: usize) -> Result<ComplexMatrix> {
    if v.len() != dim * dim {
        return Err(Error::DimMismatch { left: dim * dim, right: v.len() });
    }
    Ok(ComplexMatrix { dim, data: v.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn hadamard_of_identities_is_identity() {
        let i3 = ComplexMatrix::identity(3);
        assert_eq!(hadamard(&i3, &i3).unwrap(), i3);
    }

    #[test]
    fn kron_of_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_index_convention() {
        let a = ComplexMatrix::from_fn(2, |i, j| c((2 * i + j) as f64, 0.0));
        let b = ComplexMatrix::from_fn(2, |i, j| c(0.0, (2 * i + j + 1) as f64));
        let k = kron(&a, &b);
        // (i_a, i_b) -> i_a * 2 + i_b, left factor most significant
        assert_eq!(k[(3, 2)], a[(1, 1)] * b[(1, 0)]);
        assert_eq!(k[(1, 2)], a[(0, 1)] * b[(1, 0)]);
    }

    #[test]
    fn vectorise_is_row_major() {
        let (a, b, cc, d) = (c(1.0, 0.0), c(2.0, 1.0), c(3.0, -1.0), c(4.0, 0.0));
        let m = ComplexMatrix::from_row_major(vec![a, b, cc, d]).unwrap();
        assert_eq!(m[(0, 1)], b);
        assert_eq!(vectorise(&m), vec![a, b, cc, d]);
        assert_eq!(devectorise(&vectorise(&m), 2).unwrap(), m);
    }

    #[test]
    fn mismatched_dims_are_rejected() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert!(matches!(hadamard(&a, &b), Err(Error::DimMismatch { .. })));
        assert!(matches!(a.matmul(&b), Err(Error::DimMismatch { .. })));
        assert!(matches!(devectorise(&[c(1.0, 0.0); 3], 2), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn non_finite_entries_are_located() {
        let mut m = ComplexMatrix::identity(3);
        m[(1, 2)] = c(f64::NAN, 0.0);
        assert_eq!(m.check_finite(), Err(Error::NonFinite { row: 1, col: 2 }));
    }
}

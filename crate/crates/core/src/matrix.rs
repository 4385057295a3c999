use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl SquareComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareComplexMatrix { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn ones(n: usize) -> Self {
        SquareComplexMatrix { n, data: vec![Complex64::new(1.0, 0.0); n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        SquareComplexMatrix { n, data }
    }

    /// Builds from a row-major buffer, checking shape and finiteness.
    pub fn from_row_major(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if data.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        Ok(SquareComplexMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("rows must all have length n".into()));
        }
        Self::from_row_major(n, rows.concat())
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn diag_product(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).product()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |(A^dagger A - I)_{ij}|`.
    pub fn unitarity_residual(&self) -> f64 {
        self.adjoint().mul(self).max_abs_diff(&Self::identity(self.n))
    }

    /// `max |A_{ij} - conj(A_{ji})|`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Submatrix picking `rows` and `cols` (indices may repeat).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        assert_eq!(rows.len(), cols.len(), "selection must be square");
        Self::from_fn(rows.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        SquareComplexMatrix { n: self.n, data: self.data.iter().map(|&z| f(z)).collect() }
    }
}

impl Index<(usize, usize)> for SquareComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Wire layout: `{"n": n, "entries": [[re, im], ...]}` row-major.
#[derive(Serialize, Deserialize)]
pub(crate) struct MatrixWire {
    pub n: usize,
    pub entries: Vec<[f64; 2]>,
}

pub(crate) fn entries_to_wire(m: &SquareComplexMatrix) -> Vec<[f64; 2]> {
    m.data.iter().map(|z| [z.re, z.im]).collect()
}

pub(crate) fn entries_from_wire(n: usize, entries: &[[f64; 2]]) -> Result<SquareComplexMatrix> {
    SquareComplexMatrix::from_row_major(n, entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
}

impl Serialize for SquareComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixWire { n: self.n, entries: entries_to_wire(self) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SquareComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = MatrixWire::deserialize(d)?;
        entries_from_wire(w.n, &w.entries).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(SquareComplexMatrix::from_row_major(0, vec![]).is_err());
        assert!(SquareComplexMatrix::from_row_major(2, vec![Complex64::new(1.0, 0.0); 3]).is_err());
        let nan = vec![Complex64::new(f64::NAN, 0.0); 4];
        assert!(SquareComplexMatrix::from_row_major(2, nan).is_err());
    }

    #[test]
    fn identity_is_unitary_and_hermitian() {
        let i = SquareComplexMatrix::identity(5);
        assert_eq!(i.unitarity_residual(), 0.0);
        assert_eq!(i.hermiticity_residual(), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let m = SquareComplexMatrix::from_fn(3, |i, j| Complex64::new(i as f64, j as f64 - 0.5));
        let s = serde_json::to_string(&m).unwrap();
        let back: SquareComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}

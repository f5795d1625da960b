//! Dense complex matrix helpers shared by the quantum modules.
//!
//! Multipartite operators use the standard Kronecker ordering: party 0 is
//! the most significant digit of a row or column index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix as stored in JSON: separate real and imaginary row lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseComplex {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl DenseComplex {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        let ok = |m: &[Vec<f64>]| m.len() == rows && m.iter().all(|r| r.len() == cols);
        if !ok(&self.re) || !ok(&self.im) {
            return Err(Error::DimensionMismatch(
                "re and im must be rectangular with identical shapes".into(),
            ));
        }
        Ok(CMatrix::from_fn(rows, cols, |r, c| Complex64::new(self.re[r][c], self.im[r][c])))
    }
}

impl From<&CMatrix> for DenseComplex {
    fn from(m: &CMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect())
                .collect()
        };
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

/// Complex vector as stored in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVector {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl DenseVector {
    pub fn to_vector(&self) -> Result<CVector> {
        if self.re.len() != self.im.len() {
            return Err(Error::DimensionMismatch("re and im lengths differ".into()));
        }
        Ok(CVector::from_iterator(
            self.re.len(),
            self.re.iter().zip(&self.im).map(|(&a, &b)| Complex64::new(a, b)),
        ))
    }
}

impl From<&CVector> for DenseVector {
    fn from(v: &CVector) -> Self {
        Self {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

/// Pairwise (tree) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(crate::eigen::eigenvalues(m)?.first().copied().unwrap_or(0.0))
}

/// Largest entrywise `|M - M^dag|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// `Re tr(A B)` without forming the product.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = a[(i, j)] * b[(j, i)];
            acc += x.re;
        }
    }
    acc
}

pub fn trace_re(a: &CMatrix) -> f64 {
    (0..a.nrows()).map(|i| a[(i, i)].re).sum()
}

/// Unnormalized Frobenius (Schatten-2) norm squared.
pub fn frobenius_sq(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn kron_all<'a, I>(factors: I) -> CMatrix
where
    I: IntoIterator<Item = &'a CMatrix>,
{
    let mut acc = CMatrix::from_element(1, 1, ONE);
    for f in factors {
        acc = acc.kronecker(f);
    }
    acc
}

/// `|v><v|`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Digits of `index` in the mixed radix given by `dims` (most significant first).
pub(crate) fn split_index(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

pub(crate) fn join_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Partial trace over the parties whose positions are set in `traced`.
///
/// `dims` gives the local dimension of each party. Tracing every party yields
/// the 1x1 matrix holding `tr M`; tracing none returns a copy of `M`.
pub fn partial_trace(m: &CMatrix, dims: &[usize], traced: &[bool]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{} but parties have total dimension {}",
            m.nrows(),
            m.ncols(),
            total
        )));
    }
    if traced.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "subset mask has {} entries for {} parties",
            traced.len(),
            dims.len()
        )));
    }
    let kept_dims: Vec<usize> = dims
        .iter()
        .zip(traced)
        .filter(|(_, &t)| !t)
        .map(|(&d, _)| d)
        .collect();
    let kept: usize = kept_dims.iter().product();
    let mut out = CMatrix::zeros(kept, kept);
    let k = dims.len();
    let mut row = vec![0usize; k];
    let mut col = vec![0usize; k];
    let mut kr = Vec::with_capacity(k);
    let mut kc = Vec::with_capacity(k);
    for r in 0..total {
        split_index(r, dims, &mut row);
        for c in 0..total {
            split_index(c, dims, &mut col);
            let diagonal_on_traced = (0..k).all(|p| !traced[p] || row[p] == col[p]);
            if !diagonal_on_traced {
                continue;
            }
            kr.clear();
            kc.clear();
            for p in 0..k {
                if !traced[p] {
                    kr.push(row[p]);
                    kc.push(col[p]);
                }
            }
            let i = join_index(&kr, &kept_dims);
            let j = join_index(&kc, &kept_dims);
            out[(i, j)] += m[(r, c)];
        }
    }
    Ok(out)
}

//! Dense row-major matrices and the jittered Cholesky factorization.

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self · other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Submatrix on the given row and column indices.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Symmetric to within `rel_tol` of the largest entry.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let tol = rel_tol * self.max_abs().max(f64::MIN_POSITIVE);
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// First diagonal jitter tried after a failed plain factorization.
pub const JITTER_START: f64 = 1e-10;
/// Largest diagonal jitter before giving up.
pub const JITTER_CEILING: f64 = 1e-6;

/// Lower Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    lower: DenseMatrix,
    jitter_applied: f64,
}

impl SpdFactor {
    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    /// Diagonal regularization that was added before factorizing (0 if none).
    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    /// `out = L · z`.
    pub fn mul_lower(&self, z: &[f64], out: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(z.len(), n);
        debug_assert_eq!(out.len(), n);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.lower.row(i)[..=i];
            *o = row.iter().zip(z).map(|(l, v)| l * v).sum();
        }
    }

    /// `L · Lᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| {
            let k = i.min(j) + 1;
            self.lower.row(i)[..k]
                .iter()
                .zip(&self.lower.row(j)[..k])
                .map(|(a, b)| a * b)
                .sum()
        })
    }
}

/// Cholesky factorization with escalating diagonal jitter.
///
/// A plain factorization is attempted first; on failure the diagonal is
/// inflated by 1e-10, 1e-9, ... up to 1e-6.
pub fn spd_factorize(matrix: &DenseMatrix) -> Result<SpdFactor> {
    if !matrix.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    if matrix.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix passed to spd_factorize".into()));
    }
    if !matrix.is_symmetric(1e-12) {
        return Err(Error::Invalid("matrix is not symmetric".into()));
    }
    if let Some(lower) = cholesky(matrix, 0.0) {
        return Ok(SpdFactor {
            lower,
            jitter_applied: 0.0,
        });
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_CEILING * (1.0 + 1e-9) {
        if let Some(lower) = cholesky(matrix, jitter) {
            log::debug!("spd_factorize needed diagonal jitter {jitter:e}");
            return Ok(SpdFactor {
                lower,
                jitter_applied: jitter,
            });
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite {
        ceiling: JITTER_CEILING,
    })
}

fn cholesky(a: &DenseMatrix, jitter: f64) -> Option<DenseMatrix> {
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let (done, rest) = l.data.split_at_mut(i * n);
        let row_i = &mut rest[..n];
        for j in 0..i {
            let row_j = &done[j * n..j * n + j + 1];
            let dot: f64 = row_i[..j].iter().zip(&row_j[..j]).map(|(x, y)| x * y).sum();
            row_i[j] = (a[(i, j)] - dot) / row_j[j];
        }
        let diag = a[(i, i)] + jitter - row_i[..i].iter().map(|v| v * v).sum::<f64>();
        if !(diag > 0.0) {
            return None;
        }
        row_i[i] = diag.sqrt();
    }
    Some(l)
}

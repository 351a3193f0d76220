//! Matrix storage for LCP instances: a tridiagonal band form and a small
//! dense form.
//!
//! Rows and columns are 0-based here. The band vectors follow the padding
//! convention `lower[0] == 0` and `upper[n - 1] == 0`, so row `i` reads
//! `lower[i] * x[i - 1] + diag[i] * x[i] + upper[i] * x[i + 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{LcpError, Result};

/// Largest dimension accepted by [`DenseMatrix`].
pub const DENSE_MAX: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagSystem {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagSystem {
    /// Builds a system from three equally long bands. The padding entries
    /// `lower[0]` and `upper[n - 1]` must be zero.
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(LcpError::InvalidTridiag(
                "dimension must be at least 1".into(),
            ));
        }
        if lower.len() != n {
            return Err(LcpError::DimensionMismatch {
                what: "lower band",
                expected: n,
                found: lower.len(),
            });
        }
        if upper.len() != n {
            return Err(LcpError::DimensionMismatch {
                what: "upper band",
                expected: n,
                found: upper.len(),
            });
        }
        if lower[0] != 0.0 {
            return Err(LcpError::InvalidTridiag("lower[0] must be 0".into()));
        }
        if upper[n - 1] != 0.0 {
            return Err(LcpError::InvalidTridiag("upper[n-1] must be 0".into()));
        }
        Ok(Self { lower, diag, upper })
    }

    /// Like [`TridiagSystem::new`] but overwrites the padding entries with
    /// zero instead of rejecting them.
    pub fn from_bands(mut lower: Vec<f64>, diag: Vec<f64>, mut upper: Vec<f64>) -> Result<Self> {
        if let Some(l) = lower.first_mut() {
            *l = 0.0;
        }
        if let Some(u) = upper.last_mut() {
            *u = 0.0;
        }
        Self::new(lower, diag, upper)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![1.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let n = self.n();
        let mut s = self.diag[i] * x[i];
        if i > 0 {
            s += self.lower[i] * x[i - 1];
        }
        if i + 1 < n {
            s += self.upper[i] * x[i + 1];
        }
        s
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|i| self.row_dot(i, x)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            out[i][i] = self.diag[i];
            if i > 0 {
                out[i][i - 1] = self.lower[i];
            }
            if i + 1 < n {
                out[i][i + 1] = self.upper[i];
            }
        }
        out
    }
}

/// Row-major square matrix of dimension at most [`DENSE_MAX`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(LcpError::InvalidConfig(
                "dense matrix must be non-empty".into(),
            ));
        }
        if n > DENSE_MAX {
            return Err(LcpError::TooLarge { n, max: DENSE_MAX });
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(LcpError::DimensionMismatch {
                    what: "dense matrix row",
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row_dot(i, x)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        dense_solve(self.to_rows(), rhs.to_vec())
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap_or(col);
        let scale = a[col..].iter().map(|r| r[col].abs()).fold(0.0, f64::max);
        if a[pivot][col].abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) || a[pivot][col] == 0.0 {
            return Err(LcpError::Singular);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot = &upper[col];
        for (r, row) in lower.iter_mut().enumerate() {
            let f = row[col] / pivot[col];
            if f == 0.0 {
                continue;
            }
            for (v, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                *v -= f * p;
            }
            b[col + 1 + r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Ok(x)
}

/// The matrix `A` of an LCP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Matrix {
    Tridiag(TridiagSystem),
    Dense(DenseMatrix),
}

impl Matrix {
    pub fn n(&self) -> usize {
        match self {
            Matrix::Tridiag(t) => t.n(),
            Matrix::Dense(d) => d.n(),
        }
    }

    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            Matrix::Tridiag(t) => t.row_dot(i, x),
            Matrix::Dense(d) => d.row_dot(i, x),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Matrix::Tridiag(t) => t.mul_vec(x),
            Matrix::Dense(d) => d.mul_vec(x),
        }
    }

    pub fn diag_entry(&self, i: usize) -> f64 {
        match self {
            Matrix::Tridiag(t) => t.diag()[i],
            Matrix::Dense(d) => d.get(i, i),
        }
    }

    pub fn to_dense_rows(&self) -> Vec<Vec<f64>> {
        match self {
            Matrix::Tridiag(t) => t.to_dense(),
            Matrix::Dense(d) => d.to_rows(),
        }
    }

    pub fn as_tridiag(&self) -> Option<&TridiagSystem> {
        match self {
            Matrix::Tridiag(t) => Some(t),
            Matrix::Dense(_) => None,
        }
    }
}

impl From<TridiagSystem> for Matrix {
    fn from(t: TridiagSystem) -> Self {
        Matrix::Tridiag(t)
    }
}

impl From<DenseMatrix> for Matrix {
    fn from(d: DenseMatrix) -> Self {
        Matrix::Dense(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiag_rejects_bad_padding_and_lengths() {
        assert!(TridiagSystem::new(vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(TridiagSystem::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 2.0]).is_err());
        assert!(matches!(
            TridiagSystem::new(vec![0.0], vec![1.0, 1.0], vec![0.0, 0.0]),
            Err(LcpError::DimensionMismatch { .. })
        ));
        let t =
            TridiagSystem::from_bands(vec![5.0, -1.0], vec![2.0, 2.0], vec![-1.0, 7.0]).unwrap();
        assert_eq!(t.lower(), &[0.0, -1.0]);
        assert_eq!(t.upper(), &[-1.0, 0.0]);
    }

    #[test]
    fn tridiag_matvec_matches_dense() {
        let t = TridiagSystem::new(
            vec![0.0, -1.0, -2.0],
            vec![4.0, 5.0, 6.0],
            vec![-0.5, -0.25, 0.0],
        )
        .unwrap();
        let x = [1.0, 2.0, 3.0];
        let d = DenseMatrix::from_rows(t.to_dense()).unwrap();
        assert_eq!(t.mul_vec(&x), d.mul_vec(&x));
    }

    #[test]
    fn dense_solve_small_system() {
        let a = DenseMatrix::from_rows(vec![vec![6.0, 8.0], vec![16.0, 8.0]]).unwrap();
        let x = a.solve(&[58.0, 64.0]).unwrap();
        assert!((x[0] - 0.6).abs() < 1e-12 && (x[1] - 6.8).abs() < 1e-12);
        let s = DenseMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(s.solve(&[1.0, 1.0]), Err(LcpError::Singular)));
    }

    #[test]
    fn dense_size_limit() {
        let rows = vec![vec![0.0; DENSE_MAX + 1]; DENSE_MAX + 1];
        assert!(matches!(
            DenseMatrix::from_rows(rows),
            Err(LcpError::TooLarge { .. })
        ));
    }
}

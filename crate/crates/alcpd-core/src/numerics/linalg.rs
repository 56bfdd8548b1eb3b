// SPDX-License-Identifier: MIT OR Apache-2.0

//! Dense kernel-matrix linear algebra: Cholesky factorization with a jitter
//! ladder and triangular solves. All solves go through the factor; nothing
//! ever forms an explicit inverse.

use crate::error::{Error, Result};
use crate::tape::Scalar;

/// Multiplier ladder tried on top of `jitter0`: 0, 1, 10, ..., 1e6.
const JITTER_MULTIPLIERS: [f64; 8] = [0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6];

/// Square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Mat { n_rows, n_cols, data: vec![0.0; n_rows * n_cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::invalid_input("ragged rows in matrix literal"));
        }
        Ok(Mat { n_rows, n_cols, data: rows.concat() })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n_cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n_cols + j]
    }
}

/// Lower-triangular factor, packed row-major: row i occupies
/// `i*(i+1)/2 .. i*(i+1)/2 + i + 1`. Diagonal entries are strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerTriangular {
    n: usize,
    data: Vec<f64>,
}

impl LowerTriangular {
    pub fn from_packed(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * (n + 1) / 2 {
            return Err(Error::invalid_input(format!(
                "packed lower-triangular of dim {n} needs {} entries, got {}",
                n * (n + 1) / 2,
                data.len()
            )));
        }
        let lt = LowerTriangular { n, data };
        for i in 0..n {
            if lt.get(i, i) <= 0.0 {
                return Err(Error::invalid_input(format!(
                    "lower-triangular diagonal entry {i} is not strictly positive"
                )));
            }
        }
        Ok(lt)
    }

    /// Identity scaled by `diag`.
    pub fn scaled_identity(n: usize, diag: f64) -> Self {
        let mut data = vec![0.0; n * (n + 1) / 2];
        for i in 0..n {
            data[i * (i + 1) / 2 + i] = diag;
        }
        LowerTriangular { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        self.data[i * (i + 1) / 2 + j]
    }

    /// Solve L x = b.
    pub fn solve_forward(&self, b: &[f64]) -> Vec<f64> {
        forward_solve(&self.data, self.n, b)
    }

    /// Solve L^T x = b.
    pub fn solve_backward(&self, b: &[f64]) -> Vec<f64> {
        backward_solve(&self.data, self.n, b)
    }

    /// Solve (L L^T) x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_backward(&self.solve_forward(b))
    }

    /// Reconstructs L L^T.
    pub fn reconstruct(&self) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..=i.min(j) {
                    s += self.get(i, k) * self.get(j, k);
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    /// log det (L L^T) = 2 sum(log diag).
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.get(i, i).ln()).sum()
    }
}

/// Result of [`cholesky_jitter`]: the factor plus the diagonal boost that was
/// actually applied.
#[derive(Clone, Debug)]
pub struct JitteredCholesky {
    pub factor: LowerTriangular,
    pub jitter: f64,
}

/// Cholesky of a symmetric matrix, escalating jitter through
/// `{0, jitter0, 10 jitter0, ..., 1e6 jitter0}` until the factorization
/// succeeds. `role` names the matrix in the failure diagnostic.
pub fn cholesky_jitter(a: &Mat, jitter0: f64, role: &str) -> Result<JitteredCholesky> {
    let n = a.n_rows();
    if n == 0 || a.n_cols() != n {
        return Err(Error::invalid_input(format!(
            "{role}: cholesky needs a non-empty square matrix, got {}x{}",
            a.n_rows(),
            a.n_cols()
        )));
    }
    if jitter0 <= 0.0 || !jitter0.is_finite() {
        return Err(Error::invalid_input(format!(
            "{role}: jitter0 must be positive and finite, got {jitter0}"
        )));
    }
    let mut max_abs = 0.0_f64;
    for i in 0..n {
        for j in 0..i {
            let diff = (a[(i, j)] - a[(j, i)]).abs();
            max_abs = max_abs.max(a[(i, j)].abs());
            if diff > 1e-8 * max_abs.max(1.0) {
                return Err(Error::invalid_input(format!(
                    "{role}: matrix is not symmetric at ({i},{j}); |delta| = {diff:e}"
                )));
            }
        }
        if !a[(i, i)].is_finite() {
            return Err(Error::invalid_input(format!(
                "{role}: non-finite diagonal entry at {i}"
            )));
        }
    }

    for &mult in JITTER_MULTIPLIERS.iter() {
        let jitter = mult * jitter0;
        if let Some(packed) = try_cholesky_packed(a, jitter) {
            let factor = LowerTriangular { n, data: packed };
            return Ok(JitteredCholesky { factor, jitter });
        }
    }
    Err(Error::numerical(format!(
        "{role}: cholesky failed at maximum jitter {:e}",
        JITTER_MULTIPLIERS.last().unwrap() * jitter0
    )))
}

fn try_cholesky_packed(a: &Mat, jitter: f64) -> Option<Vec<f64>> {
    let n = a.n_rows();
    let mut l = vec![0.0; n * (n + 1) / 2];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)] + if i == j { jitter } else { 0.0 };
            for k in 0..j {
                s -= l[i * (i + 1) / 2 + k] * l[j * (j + 1) / 2 + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * (i + 1) / 2 + j] = s.sqrt();
            } else {
                l[i * (i + 1) / 2 + j] = s / l[j * (j + 1) / 2 + j];
            }
        }
    }
    Some(l)
}

/// Generic Cholesky with a fixed, pre-validated jitter. The caller picks the
/// jitter on a plain-`f64` pass first, so the factorization here follows the
/// identical arithmetic on either scalar type.
pub(crate) fn cholesky_packed_generic<S: Scalar>(
    a: &[S],
    n: usize,
    jitter: f64,
    role: &str,
) -> Result<Vec<S>> {
    debug_assert_eq!(a.len(), n * n);
    let zero = a[0].lift(0.0);
    let mut l = vec![zero; n * (n + 1) / 2];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            if i == j {
                s = s + jitter;
            }
            for k in 0..j {
                s = s - l[i * (i + 1) / 2 + k] * l[j * (j + 1) / 2 + k];
            }
            if i == j {
                if s.value() <= 0.0 || !s.value().is_finite() {
                    return Err(Error::numerical(format!(
                        "{role}: cholesky pivot {i} not positive at fixed jitter {jitter:e}"
                    )));
                }
                l[i * (i + 1) / 2 + j] = s.sqrt();
            } else {
                l[i * (i + 1) / 2 + j] = s / l[j * (j + 1) / 2 + j];
            }
        }
    }
    Ok(l)
}

/// Solve L x = b with L packed lower-triangular.
pub(crate) fn forward_solve<S: Scalar>(l: &[S], n: usize, b: &[S]) -> Vec<S> {
    debug_assert_eq!(b.len(), n);
    let mut x = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = b[i];
        for (j, xj) in x.iter().enumerate().take(i) {
            s = s - l[i * (i + 1) / 2 + j] * *xj;
        }
        x.push(s / l[i * (i + 1) / 2 + i]);
    }
    x
}

/// Solve L^T x = b with L packed lower-triangular.
pub(crate) fn backward_solve<S: Scalar>(l: &[S], n: usize, b: &[S]) -> Vec<S> {
    debug_assert_eq!(b.len(), n);
    let zero = if n > 0 { l[0].lift(0.0) } else { return Vec::new() };
    let mut x = vec![zero; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s = s - l[j * (j + 1) / 2 + i] * x[j];
        }
        x[i] = s / l[i * (i + 1) / 2 + i];
    }
    x
}

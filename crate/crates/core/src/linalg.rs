//! Small linear-algebra kernels used on the hot path of time stepping.
//!
//! Operators are assembled densely (desk-scale sizes) but applied through a
//! compressed-row copy, and the Newmark system matrix is factored with a
//! banded Cholesky that degrades gracefully to a dense one.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Compressed sparse row copy of a dense matrix (exact zeros dropped).
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let (nrows, ncols) = m.shape();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..nrows {
            for j in 0..ncols {
                let a = m[(i, j)];
                if a != 0.0 {
                    col_idx.push(j);
                    values.push(a);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y = M x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    /// `y += alpha * M x`
    pub fn mul_vec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi += alpha * acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec(x, &mut y);
        y
    }
}

/// Cholesky factor `M = L L^T` of a symmetric positive definite matrix stored
/// in lower band form. The half bandwidth is detected from the nonzero pattern.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    // band[i * (bandwidth + 1) + (bandwidth - (i - j))] = L[i][j] for i - bandwidth <= j <= i
    band: Vec<f64>,
}

#[allow(clippy::needless_range_loop)]
impl BandedCholesky {
    pub fn factor(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::usage(format!(
                "cholesky: matrix is {}x{}, not square",
                n,
                m.ncols()
            )));
        }
        let mut bandwidth = 0;
        for j in 0..n {
            for i in (j + 1)..n {
                if m[(i, j)] != 0.0 || m[(j, i)] != 0.0 {
                    bandwidth = bandwidth.max(i - j);
                }
            }
        }
        let w = bandwidth + 1;
        let mut band = vec![0.0; n * w];
        let idx = |i: usize, j: usize| i * w + (bandwidth + j - i);
        for i in 0..n {
            let lo = i.saturating_sub(bandwidth);
            for j in lo..=i {
                band[idx(i, j)] = m[(i, j)];
            }
        }
        for j in 0..n {
            let lo = j.saturating_sub(bandwidth);
            let mut d = band[idx(j, j)];
            for k in lo..j {
                let l = band[idx(j, k)];
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::numerical(format!(
                    "cholesky: matrix is not positive definite (pivot {j} = {d:e})"
                )));
            }
            let djj = d.sqrt();
            band[idx(j, j)] = djj;
            let hi = (j + bandwidth).min(n - 1);
            for i in (j + 1)..=hi {
                let lo_i = i.saturating_sub(bandwidth).max(lo);
                let mut s = band[idx(i, j)];
                for k in lo_i..j {
                    s -= band[idx(i, k)] * band[idx(j, k)];
                }
                band[idx(i, j)] = s / djj;
            }
        }
        Ok(Self { n, bandwidth, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Solves `M x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        let p = self.bandwidth;
        let w = p + 1;
        let idx = |i: usize, j: usize| i * w + (p + j - i);
        for i in 0..self.n {
            let lo = i.saturating_sub(p);
            let mut s = b[i];
            for k in lo..i {
                s -= self.band[idx(i, k)] * b[k];
            }
            b[i] = s / self.band[idx(i, i)];
        }
        for i in (0..self.n).rev() {
            let hi = (i + p).min(self.n.saturating_sub(1));
            let mut s = b[i];
            for k in (i + 1)..=hi {
                s -= self.band[idx(k, i)] * b[k];
            }
            b[i] = s / self.band[idx(i, i)];
        }
    }
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

//! Minimal dense linear algebra: row-major matrices, Gauss-Jordan solves, and
//! reduced row echelon form with partial pivoting.
//!
//! The kernel machinery needs the combinatorial pivot pattern of the reduced
//! form, which general-purpose decompositions do not expose, so the reduction
//! is written out here.

use crate::error::{Error, Result};
use crate::tol;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Mat {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "matrix has {} columns, vector has {} entries",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Max-norm distance to the identity; the matrix need not be square as
    /// long as it matches the identity's shape.
    pub fn residual_from_identity(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.get(i, j) - target).abs());
            }
        }
        worst
    }

    /// In-place reduced row echelon form with partial pivoting.
    ///
    /// Returns the pivot columns in order (row r has its pivot, normalized to
    /// one, in `pivots[r]`). Candidate pivots with magnitude at most
    /// `pivot_tol` are treated as zero, and entries below
    /// [`tol::RREF_CLEANUP`] are snapped to exact zero afterwards.
    pub fn rref(&mut self, pivot_tol: f64) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..self.cols {
            if r == self.rows {
                break;
            }
            let (best_row, best_val) = (r..self.rows)
                .map(|i| (i, self.get(i, col).abs()))
                .fold((r, 0.0), |acc, cand| if cand.1 > acc.1 { cand } else { acc });
            if best_val <= pivot_tol {
                continue;
            }
            self.swap_rows(r, best_row);
            let inv = 1.0 / self.get(r, col);
            for j in 0..self.cols {
                let v = self.get(r, j) * inv;
                self.set(r, j, v);
            }
            self.set(r, col, 1.0);
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.get(i, col);
                if factor == 0.0 {
                    continue;
                }
                for j in 0..self.cols {
                    let v = self.get(i, j) - factor * self.get(r, j);
                    self.set(i, j, v);
                }
                self.set(i, col, 0.0);
            }
            pivots.push(col);
            r += 1;
        }
        for v in &mut self.data {
            if v.abs() < tol::RREF_CLEANUP {
                *v = 0.0;
            }
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            let (x, y) = (self.get(a, j), self.get(b, j));
            self.set(a, j, y);
            self.set(b, j, x);
        }
    }
}

/// Solves A·X = B for square A by Gauss-Jordan elimination with partial
/// pivoting. Fails with `Numerics` when A is singular to working precision.
pub fn solve_square(a: &Mat, b: &Mat) -> Result<Mat> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension(format!(
            "solve needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.rows() != n {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, expected {n}",
            b.rows()
        )));
    }
    let mut work = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let (best_row, best_val) = (col..n)
            .map(|i| (i, work.get(i, col).abs()))
            .fold((col, 0.0), |acc, cand| if cand.1 > acc.1 { cand } else { acc });
        if best_val <= 1e-13 {
            return Err(Error::Numerics(format!(
                "singular system (pivot {best_val:.3e} in column {col})"
            )));
        }
        work.swap_rows(col, best_row);
        rhs.swap_rows(col, best_row);
        let inv = 1.0 / work.get(col, col);
        for j in 0..n {
            let v = work.get(col, j) * inv;
            work.set(col, j, v);
        }
        for j in 0..rhs.cols() {
            let v = rhs.get(col, j) * inv;
            rhs.set(col, j, v);
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let factor = work.get(i, col);
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                let v = work.get(i, j) - factor * work.get(col, j);
                work.set(i, j, v);
            }
            for j in 0..rhs.cols() {
                let v = rhs.get(i, j) - factor * rhs.get(col, j);
                rhs.set(i, j, v);
            }
        }
    }
    Ok(rhs)
}

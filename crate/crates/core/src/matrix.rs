//! Minimal dense row-major matrix with an LU solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// Solves `self * x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let lu = Lu::factor(self.clone())?;
        Ok(lu.solve(b))
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.rows;
        let lu = Lu::factor(self.clone())?;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[c] = 1.0;
            let col = lu.solve(&e);
            for r in 0..n {
                inv[(r, c)] = col[r];
            }
        }
        Ok(inv)
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// In-place LU factorization with row pivoting.
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(mut a: Matrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::input("LU factorization needs a square matrix"));
        }
        let n = a.rows;
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.data.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        for k in 0..n {
            let (p, pivot) = (k..n).map(|r| (r, a[(r, k)].abs())).fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= 1e-14 * scale {
                return Err(Error::Numeric(alloc::format!("singular matrix at column {k}")));
            }
            if p != k {
                for c in 0..n {
                    a.data.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let inv_pivot = 1.0 / a[(k, k)];
            for r in k + 1..n {
                let factor = a[(r, k)] * inv_pivot;
                if factor == 0.0 {
                    continue;
                }
                a[(r, k)] = factor;
                let (upper, lower) = a.data.split_at_mut(r * n);
                let pivot_row = &upper[k * n + k + 1..k * n + n];
                let target = &mut lower[k + 1..n];
                for (t, pv) in target.iter_mut().zip(pivot_row) {
                    *t -= factor * pv;
                }
            }
        }
        Ok(Lu { lu: a, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let row = self.lu.row(r);
            let s: f64 = row[..r].iter().zip(&x[..r]).map(|(a, b)| a * b).sum();
            x[r] -= s;
        }
        for r in (0..n).rev() {
            let row = self.lu.row(r);
            let s: f64 = row[r + 1..].iter().zip(&x[r + 1..]).map(|(a, b)| a * b).sum();
            x[r] = (x[r] - s) / row[r];
        }
        x
    }
}

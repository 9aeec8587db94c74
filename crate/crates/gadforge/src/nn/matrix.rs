//! Minimal row-major dense matrix.

use super::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(T::zero());
    }

    /// `out[r] = row(r) . w[:, :]` for every row: dense `rows x in` times
    /// `in x out`.
    pub fn matmul(&self, w: &Mat<T>) -> Mat<T> {
        debug_assert_eq!(self.cols, w.rows);
        let mut out = Mat::zeros(self.rows, w.cols);
        for r in 0..self.rows {
            let x = self.row(r);
            let o = out.row_mut(r);
            for (i, &xi) in x.iter().enumerate() {
                if xi == T::zero() {
                    continue;
                }
                let wrow = w.row(i);
                for (oj, &wij) in o.iter_mut().zip(wrow) {
                    *oj += xi * wij;
                }
            }
        }
        out
    }
}

/// `dot(a, b)` over equal-length slices.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// `out += a * x` elementwise.
pub fn axpy<T: Real>(out: &mut [T], a: T, x: &[T]) {
    debug_assert_eq!(out.len(), x.len());
    for (o, &xi) in out.iter_mut().zip(x) {
        *o += a * xi;
    }
}

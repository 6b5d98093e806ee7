//! Small dense complex matrices, row-major.
//!
//! Blocks in the structured solvers are at most a few rows wide, so a flat
//! `Vec` with hand-written loops beats a general-purpose matrix type in the
//! hot paths. Conversions to nalgebra exist for the dense reference solvers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::ops::{Index, IndexMut};

pub type C64 = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMat {
    #[must_use]
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    #[must_use]
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    #[must_use]
    pub fn scalar(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(s, 0.0);
        }
        m
    }

    #[must_use]
    pub fn from_real_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[must_use]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[must_use]
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    #[must_use]
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.cols);
        mul_into(self, other, &mut out);
        out
    }

    /// `self * other^†`.
    #[must_use]
    pub fn mul_adj(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.rows);
        mul_adj_into(self, other, &mut out);
        out
    }

    #[must_use]
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (o, x) in out.data.iter_mut().zip(&other.data) {
            *o += x;
        }
        out
    }

    #[must_use]
    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (o, x) in out.data.iter_mut().zip(&other.data) {
            *o -= x;
        }
        out
    }

    #[must_use]
    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for o in &mut out.data {
            *o *= s;
        }
        out
    }

    pub fn add_scaled_identity(&mut self, s: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)].re += s;
        }
    }

    /// Replace by the Hermitian part `(A + A^†)/2`.
    pub fn hermitianize(&mut self) {
        let n = self.rows;
        for i in 0..n {
            self[(i, i)].im = 0.0;
            for j in (i + 1)..n {
                let v = 0.5 * (self[(i, j)] + self[(j, i)].conj());
                self[(i, j)] = v;
                self[(j, i)] = v.conj();
            }
        }
    }

    #[must_use]
    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    #[must_use]
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `A - A^†`.
    #[must_use]
    pub fn hermiticity_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    #[must_use]
    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    #[must_use]
    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
    /// matching unitary (eigenvectors in columns).
    #[must_use]
    pub fn hermitian_eigen(&self) -> (Vec<f64>, CMat) {
        let n = self.rows;
        if n == 1 {
            return (vec![self[(0, 0)].re], CMat::identity(1));
        }
        let mut h = self.clone();
        h.hermitianize();
        let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
        (vals, vecs)
    }

    /// Ascending eigenvalues of a Hermitian matrix.
    #[must_use]
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        self.hermitian_eigen().0
    }

    /// Apply a real function to the spectrum of a Hermitian matrix.
    #[must_use]
    pub fn hermitian_map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let (vals, u) = self.hermitian_eigen();
        let n = self.rows;
        CMat::from_fn(n, n, |i, j| (0..n).map(|k| u[(i, k)] * f(vals[k]) * u[(j, k)].conj()).sum())
    }

    /// Lower Cholesky factor `L` with `L L^† = A`, or `None` if a pivot is not
    /// positive.
    #[must_use]
    pub fn cholesky(&self) -> Option<CMat> {
        let n = self.rows;
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = C64::new(d, 0.0);
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting.
    #[must_use]
    pub fn inverse(&self) -> Option<CMat> {
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = CMat::identity(n);
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))?;
            let p = a[(piv, col)];
            if !(p.norm() > 0.0) || !p.is_finite() {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let pinv = 1.0 / p;
            for j in 0..n {
                a[(col, j)] *= pinv;
                inv[(col, j)] *= pinv;
            }
            for i in 0..n {
                if i != col {
                    let f = a[(i, col)];
                    if f.norm() != 0.0 {
                        for j in 0..n {
                            let (x, y) = (a[(col, j)], inv[(col, j)]);
                            a[(i, j)] -= f * x;
                            inv[(i, j)] -= f * y;
                        }
                    }
                }
            }
        }
        Some(inv)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `out = a * b`.
#[inline]
pub fn mul_into(a: &CMat, b: &CMat, out: &mut CMat) {
    debug_assert_eq!(a.cols, b.rows);
    out.rows = a.rows;
    out.cols = b.cols;
    out.data.resize(a.rows * b.cols, C64::new(0.0, 0.0));
    for i in 0..a.rows {
        for j in 0..b.cols {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..a.cols {
                s += a.data[i * a.cols + k] * b.data[k * b.cols + j];
            }
            out.data[i * b.cols + j] = s;
        }
    }
}

/// `out = a * b^†`.
#[inline]
pub fn mul_adj_into(a: &CMat, b: &CMat, out: &mut CMat) {
    debug_assert_eq!(a.cols, b.cols);
    out.rows = a.rows;
    out.cols = b.rows;
    out.data.resize(a.rows * b.rows, C64::new(0.0, 0.0));
    for i in 0..a.rows {
        for j in 0..b.rows {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..a.cols {
                s += a.data[i * a.cols + k] * b.data[j * b.cols + k].conj();
            }
            out.data[i * b.rows + j] = s;
        }
    }
}

/// Dense Hermitian matrix assembled from blocks, for reference solves.
#[must_use]
pub fn assemble_blocks(sizes: &[usize], block: impl Fn(usize, usize) -> Option<CMat>) -> CMat {
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let n: usize = sizes.iter().sum();
    let mut out = CMat::zeros(n, n);
    for bi in 0..sizes.len() {
        for bj in 0..sizes.len() {
            if let Some(b) = block(bi, bj) {
                for i in 0..sizes[bi] {
                    for j in 0..sizes[bj] {
                        out[(offsets[bi] + i, offsets[bj] + j)] = b[(i, j)];
                    }
                }
            }
        }
    }
    out
}

//! Dense complex matrices and a Hermitian positive-definite Cholesky solver.
//!
//! Storage is row-major. The Cholesky factor is kept as a full square matrix
//! with a zero upper triangle so that rows of `L` are contiguous for the inner
//! products of the factorization and of the forward solve.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * alpha).collect(),
        }
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &CMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * alpha;
        }
    }

    pub fn add_diagonal(&mut self, value: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self[(i, i)].re += value;
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let orow = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..=i {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest deviation of any entry from the first entry of its diagonal.
    pub fn toeplitz_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let (i0, j0) = if i >= j { (i - j, 0) } else { (0, j - i) };
                worst = worst.max((self[(i, j)] - self[(i0, j0)]).norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Unconjugated inner product `Σ a[k]·b[k]`.
#[inline]
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re - x.im * y.im;
        im += x.re * y.im + x.im * y.re;
    }
    Complex64::new(re, im)
}

/// `Σ a[k]·conj(b[k])`
#[inline]
pub fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.im * y.re - x.re * y.im;
    }
    Complex64::new(re, im)
}

pub fn norm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Lower-triangular factor `L` with `A = L·Lᴴ` for a Hermitian positive-definite `A`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    factor: CMatrix,
}

impl Cholesky {
    /// Factorizes the lower triangle of `a`; the upper triangle is never read.
    ///
    /// A pivot at or below `n·ε·max|a_ii|` is treated as singular.
    pub fn new(a: &CMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                actual: a.cols(),
            });
        }
        let n = a.rows();
        let max_diag = (0..n).map(|i| a[(i, i)].re.abs()).fold(0.0, f64::max);
        let threshold = n as f64 * f64::EPSILON * max_diag;
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let (head, tail) = l.data.split_at_mut((j + 1) * n);
            let row_j = &mut head[j * n..];
            let d = a[(j, j)].re - norm_sqr(&row_j[..j]);
            if !(d > threshold) {
                return Err(Error::SingularCovariance {
                    index: j,
                    pivot: d,
                    threshold,
                });
            }
            let pivot = d.sqrt();
            row_j[j] = Complex64::new(pivot, 0.0);
            let row_j = &head[j * n..j * n + j];
            for (r, row_i) in tail.chunks_exact_mut(n).enumerate() {
                let i = j + 1 + r;
                let s = a[(i, j)] - dot_conj(&row_i[..j], row_j);
                row_i[j] = s / pivot;
            }
        }
        Ok(Self { factor: l })
    }

    pub fn dim(&self) -> usize {
        self.factor.rows()
    }

    pub fn factor(&self) -> &CMatrix {
        &self.factor
    }

    /// Rebuilds from a stored factor; the caller guarantees it is lower triangular
    /// with a positive real diagonal.
    pub fn from_factor(factor: CMatrix) -> Result<Self> {
        if !factor.is_square() {
            return Err(Error::DimensionMismatch {
                expected: factor.rows(),
                actual: factor.cols(),
            });
        }
        for i in 0..factor.rows() {
            let d = factor[(i, i)];
            if !(d.re > 0.0) || d.im != 0.0 {
                return Err(Error::Corrupt(format!("factor diagonal {i} is {d}")));
            }
        }
        Ok(Self { factor })
    }

    /// `log det A = 2 Σ log L_ii`
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.factor[(i, i)].re.ln()).sum::<f64>()
    }

    /// Solves `L·w = b`.
    pub fn forward(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            let row = self.factor.row(i);
            let s = b[i] - dot(&row[..i], &w);
            w.push(s / row[i].re);
        }
        w
    }

    /// Solves `Lᴴ·x = w` in place, sweeping rows of `L` so memory access stays contiguous.
    pub fn backward_in_place(&self, w: &mut [Complex64]) {
        let n = self.dim();
        assert_eq!(w.len(), n);
        for i in (0..n).rev() {
            let row = self.factor.row(i);
            let xi = w[i] / row[i].re;
            w[i] = xi;
            for (wk, lik) in w[..i].iter_mut().zip(&row[..i]) {
                *wk -= lik.conj() * xi;
            }
        }
    }

    /// Solves `A·x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut w = self.forward(b);
        self.backward_in_place(&mut w);
        w
    }

    /// Solves `A·X = B` column by column.
    pub fn solve_matrix(&self, b: &CMatrix) -> CMatrix {
        assert_eq!(b.rows(), self.dim());
        let mut out = CMatrix::zeros(b.rows(), b.cols());
        let mut col = vec![Complex64::new(0.0, 0.0); b.rows()];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(i, j)];
            }
            let x = self.solve(&col);
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// `‖L⁻¹·B‖_F²`, i.e. `trace(Bᴴ·A⁻¹·B)`.
    pub fn whitened_frobenius_sqr(&self, b: &CMatrix) -> f64 {
        assert_eq!(b.rows(), self.dim());
        let mut col = vec![Complex64::new(0.0, 0.0); b.rows()];
        let mut total = 0.0;
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(i, j)];
            }
            total += norm_sqr(&self.forward(&col));
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hpd(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let mut a = g.matmul(&g.adjoint());
        a.add_diagonal(0.1);
        a
    }

    #[test]
    fn factor_reconstructs_matrix() {
        let a = random_hpd(9, 3);
        let chol = Cholesky::new(&a).unwrap();
        let l = chol.factor();
        let rebuilt = l.matmul(&l.adjoint());
        assert!(rebuilt.max_abs_diff(&a) < 1e-12);
        for i in 0..9 {
            for j in i + 1..9 {
                assert_eq!(l[(i, j)], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn solve_matches_product() {
        let a = random_hpd(12, 5);
        let x: Vec<Complex64> = (0..12).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
        let b = a.mul_vec(&x);
        let got = Cholesky::new(&a).unwrap().solve(&b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-9);
        }
    }

    #[test]
    fn log_det_of_diagonal() {
        let mut a = CMatrix::identity(4);
        for i in 0..4 {
            a[(i, i)] = Complex64::new((i + 1) as f64, 0.0);
        }
        let chol = Cholesky::new(&a).unwrap();
        assert!((chol.log_det() - (24.0f64).ln()).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let v: Vec<Complex64> = (0..5).map(|k| Complex64::new(1.0, k as f64)).collect();
        let a = CMatrix::from_fn(5, 5, |i, j| v[i] * v[j].conj());
        match Cholesky::new(&a) {
            Err(Error::SingularCovariance { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn whitened_frobenius_is_trace_form() {
        let a = random_hpd(6, 8);
        let b = random_hpd(6, 9);
        let chol = Cholesky::new(&a).unwrap();
        let direct = b.adjoint().matmul(&chol.solve_matrix(&b)).trace();
        assert!((chol.whitened_frobenius_sqr(&b) - direct.re).abs() < 1e-9);
        assert!(direct.im.abs() < 1e-9);
    }
}

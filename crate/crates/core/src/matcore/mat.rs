use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{Float, Zero};

use crate::error::{QsvdError, Result};
use crate::scalar::{Real, Scalar};

/// Dense row-major matrix over a real or complex [`Scalar`].
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

/// Real matrix.
pub type MatR<T> = Mat<T>;
/// Complex matrix.
pub type MatC<T> = Mat<Complex<T>>;

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(QsvdError::InvalidInput(format!("expected {rows}x{cols} entries, got {}", data.len())));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Panics on ragged input; intended for literals.
    pub fn from_rows(rows: &[&[S]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.iter().flat_map(|row| row.iter().copied()).collect() }
    }

    pub fn from_diag(d: &[S]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
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

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn set_row(&mut self, i: usize, values: &[S]) {
        self.data[i * self.cols..(i + 1) * self.cols].copy_from_slice(values);
    }

    pub fn col(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diag(&self) -> Vec<S> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conjugate())
    }

    pub fn map<R: Scalar>(&self, f: impl Fn(S) -> R) -> Mat<R> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn scale(&self, a: S) -> Self {
        self.map(|x| x * a)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == S::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| self.row(i).iter().zip(v).fold(S::zero(), |acc, (&a, &b)| acc + a * b)).collect()
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: S, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "axpy shape mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&x, &y)| x + a * y).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> S::Real {
        self.data.iter().map(|x| x.modulus_sqr()).sum::<S::Real>().sqrt()
    }

    pub fn max_abs(&self) -> S::Real {
        self.data.iter().map(|x| x.modulus()).fold(<S::Real as Zero>::zero(), |a, b| a.max(b))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite_value())
    }

    /// `‖A^H A − I‖_F`.
    pub fn orthogonality_error(&self) -> S::Real {
        let g = self.adjoint().matmul(self);
        (&g - &Mat::identity(g.rows)).frobenius_norm()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}

impl<T: Real> Mat<T> {
    /// Promote a real matrix to a complex one.
    pub fn to_complex(&self) -> MatC<T> {
        self.map(|x| Complex::new(x, T::zero()))
    }
}

impl<T: Real> Mat<Complex<T>> {
    pub fn re(&self) -> Mat<T> {
        self.map(|z| z.re)
    }

    pub fn im(&self) -> Mat<T> {
        self.map(|z| z.im)
    }
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;

    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> Add for &Mat<S> {
    type Output = Mat<S>;

    fn add(self, rhs: Self) -> Mat<S> {
        self.axpy(S::one(), rhs)
    }
}

impl<S: Scalar> Sub for &Mat<S> {
    type Output = Mat<S>;

    fn sub(self, rhs: Self) -> Mat<S> {
        self.axpy(-S::one(), rhs)
    }
}

impl<S: Scalar> Mul for &Mat<S> {
    type Output = Mat<S>;

    fn mul(self, rhs: Self) -> Mat<S> {
        self.matmul(rhs)
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<S: Scalar>(a: &[S]) -> S::Real {
    a.iter().map(|x| x.modulus_sqr()).sum::<S::Real>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_and_transpose() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Mat::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(&a * &b, Mat::from_rows(&[&[2.0, 1.0], &[4.0, 3.0]]));
        assert_eq!(a.transpose()[(0, 1)], 3.0);
        assert_eq!(a.matvec(&[1.0, 1.0]), vec![3.0, 7.0]);
    }

    #[test]
    fn from_vec_rejects_bad_shape() {
        assert!(Mat::<f64>::from_vec(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn adjoint_conjugates() {
        let z = Mat::from_rows(&[&[Complex::new(1.0, 2.0)]]);
        assert_eq!(z.adjoint()[(0, 0)], Complex::new(1.0, -2.0));
    }
}

//! Dense matrix layer: storage, SVD, Cayley transform and the two structure
//! restoring maps (skew part, nearest orthogonal matrix).

mod lu;
mod mat;
mod svd;

pub use lu::solve;
pub use mat::{dot, norm2, Mat, MatC, MatR};
pub use svd::{svd, SvdTriple};

use num_traits::Float;

use crate::error::{QsvdError, Result};
use crate::scalar::{Real, Scalar};

/// Cayley transform `[I − (h/2)s]⁻¹ [I + (h/2)s]`.
///
/// Orthogonal for real skew-symmetric `s`, unitary for skew-Hermitian `s`.
pub fn cayley<S: Scalar>(s: &Mat<S>, h: S::Real) -> Result<Mat<S>> {
    if !s.is_square() {
        return Err(QsvdError::InvalidInput("cayley: generator must be square".into()));
    }
    let half = S::from_real(h / S::Real::lit(2.0));
    let id = Mat::identity(s.rows());
    let lhs = id.axpy(-half, s);
    let rhs = id.axpy(half, s);
    solve(&lhs, &rhs)
}

/// 1×1 Cayley factor `(1 + (h/2)s) / (1 − (h/2)s)`.
pub fn cayley_scalar<S: Scalar>(s: S, h: S::Real) -> Result<S> {
    let half = S::from_real(h / S::Real::lit(2.0));
    let den = S::one() - half * s;
    if !(den.modulus() > S::Real::epsilon()) {
        return Err(QsvdError::StepFailure { pivot: den.modulus().to_f64_lossy() });
    }
    Ok((S::one() + half * s) / den)
}

/// `(m − mᵀ)/2`; the result is exactly skew-symmetric.
pub fn skew_part<T: Real>(m: &MatR<T>) -> MatR<T> {
    assert!(m.is_square(), "skew_part: matrix must be square");
    let two = T::lit(2.0);
    MatR::from_fn(m.rows(), m.cols(), |i, j| (m[(i, j)] - m[(j, i)]) / two)
}

/// `(m + mᵀ)/2`.
pub fn sym_part<T: Real>(m: &MatR<T>) -> MatR<T> {
    let two = T::lit(2.0);
    MatR::from_fn(m.rows(), m.cols(), |i, j| (m[(i, j)] + m[(j, i)]) / two)
}

/// Closest orthogonal matrix in Frobenius norm, `u vᵀ` from the SVD of `m`.
pub fn nearest_orthogonal<T: Real>(m: &MatR<T>) -> Result<MatR<T>> {
    let r = svd(m)?;
    let n = r.s.len();
    let smax = r.s[0];
    let smin = r.s[n - 1];
    if !(smin > smax * T::epsilon() * T::lit(n as f64)) {
        return Err(QsvdError::ProjectionUndefined { smallest: smin.to_f64_lossy() });
    }
    Ok(r.u.matmul(&r.v.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn rot(theta: f64) -> MatR<f64> {
        MatR::from_rows(&[&[theta.cos(), -theta.sin()], &[theta.sin(), theta.cos()]])
    }

    #[test]
    fn cayley_of_zero_is_identity() {
        let q = cayley(&MatR::<f64>::zeros(3, 3), 0.7).unwrap();
        assert_eq!(q, MatR::identity(3));
    }

    #[test]
    fn cayley_rotation_generator() {
        let w = 1.3;
        let s = MatR::from_rows(&[&[0.0, w], &[-w, 0.0]]);
        let q = cayley(&s, 0.4).unwrap();
        assert!(q.orthogonality_error() < 1e-15);
        let det = q[(0, 0)] * q[(1, 1)] - q[(0, 1)] * q[(1, 0)];
        assert!((det - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cayley_diagonal_skew_hermitian() {
        let (h, lambda) = (0.3, 2.5);
        let s = MatC::from_diag(&[Complex64::new(0.0, 0.0), Complex64::new(0.0, -lambda)]);
        let q = cayley(&s, h).unwrap();
        // (1 + (h/2)(−iλ)) / (1 − (h/2)(−iλ)) = (1 − ihλ/2) / (1 + ihλ/2)
        let expect = Complex64::new(1.0, -h * lambda / 2.0) / Complex64::new(1.0, h * lambda / 2.0);
        assert_eq!(q[(0, 0)], Complex64::new(1.0, 0.0));
        assert!((q[(1, 1)] - expect).norm() < 1e-15);
        assert!((q[(1, 1)].norm() - 1.0).abs() < 1e-15);
        assert!(q[(0, 1)].norm() == 0.0 && q[(1, 0)].norm() == 0.0);
        assert!((q[(1, 1)] - cayley_scalar(Complex64::new(0.0, -lambda), h).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn cayley_singular_resolvent() {
        // I − (h/2)s singular for s = (2/h)·I
        let s = MatR::<f64>::identity(2).scale(2.0);
        assert!(matches!(cayley(&s, 1.0), Err(QsvdError::StepFailure { .. })));
        assert!(cayley_scalar(2.0f64, 1.0).is_err());
    }

    #[test]
    fn skew_part_examples() {
        let m = MatR::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert_eq!(skew_part(&m), MatR::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]));
        let sym = MatR::from_rows(&[&[1.0, 2.0], &[2.0, 5.0]]);
        assert_eq!(skew_part(&sym), MatR::zeros(2, 2));
        let sk = MatR::from_rows(&[&[0.0, 3.0], &[-3.0, 0.0]]);
        assert_eq!(skew_part(&sk), sk);
    }

    #[test]
    fn nearest_orthogonal_examples() {
        let r = rot(0.3);
        assert!((&nearest_orthogonal(&r).unwrap() - &r).max_abs() < 1e-12);
        let d = MatR::from_diag(&[2.0, 0.5]);
        assert!((&nearest_orthogonal(&d).unwrap() - &MatR::identity(2)).max_abs() < 1e-12);
        let scaled = r.scale(1.01);
        assert!((&nearest_orthogonal(&scaled).unwrap() - &r).max_abs() < 1e-12);
    }

    #[test]
    fn nearest_orthogonal_rank_deficient() {
        let m = MatR::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(nearest_orthogonal(&m), Err(QsvdError::ProjectionUndefined { .. })));
    }
}

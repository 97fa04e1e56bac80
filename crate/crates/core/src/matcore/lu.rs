use num_traits::Float;

use crate::error::{QsvdError, Result};
use crate::matcore::mat::Mat;
use crate::scalar::{Real, Scalar};

/// Solve `a · x = b` for a square `a` by Gaussian elimination with partial
/// pivoting. A pivot below `n · eps · max|a|` is reported as
/// [`QsvdError::StepFailure`].
pub fn solve<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Result<Mat<S>> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n {
        return Err(QsvdError::InvalidInput("solve: shape mismatch".into()));
    }
    let m = b.cols();
    let scale = a.max_abs();
    let tiny = scale * S::Real::epsilon() * S::Real::lit(n as f64);

    let mut lu: Vec<Vec<S>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut x: Vec<Vec<S>> = (0..n).map(|i| b.row(i).to_vec()).collect();

    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| lu[i][k].modulus().partial_cmp(&lu[j][k].modulus()).unwrap()).unwrap();
        let pmag = lu[piv][k].modulus();
        if !(pmag > tiny) {
            return Err(QsvdError::StepFailure { pivot: pmag.to_f64_lossy() });
        }
        lu.swap(k, piv);
        x.swap(k, piv);
        let p = lu[k][k];
        for i in k + 1..n {
            let f = lu[i][k] / p;
            if f == S::zero() {
                continue;
            }
            for j in k..n {
                let t = lu[k][j];
                lu[i][j] -= f * t;
            }
            for j in 0..m {
                let t = x[k][j];
                x[i][j] -= f * t;
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..m {
            let mut acc = x[k][j];
            for i in k + 1..n {
                acc -= lu[k][i] * x[i][j];
            }
            x[k][j] = acc / lu[k][k];
        }
    }
    Ok(Mat::from_fn(n, m, |i, j| x[i][j]))
}

//! One-sided (Hestenes) Jacobi SVD for small dense square matrices.
//!
//! Jacobi rotations are applied to column pairs of a working copy until all
//! pairs are numerically orthogonal; column norms are then the singular
//! values. The method is slower than bidiagonalisation but gives factors that
//! are orthogonal to working precision, which the factor flow depends on.

use crate::error::{QsvdError, Result};
use crate::matcore::mat::{dot, norm2, MatR};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// `m = u · diag(s) · vᵀ` with `s` descending.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdTriple<T> {
    pub u: MatR<T>,
    pub s: Vec<T>,
    pub v: MatR<T>,
}

impl<T: Real> SvdTriple<T> {
    pub fn reconstruct(&self) -> MatR<T> {
        let n = self.s.len();
        let us = MatR::from_fn(n, n, |i, j| self.u[(i, j)] * self.s[j]);
        us.matmul(&self.v.transpose())
    }
}

/// Singular value decomposition of a square real matrix.
///
/// Columns are ordered by descending singular value (stable for ties) and each
/// left singular vector is signed so that its largest-magnitude entry is
/// positive; the sign is mirrored onto the matching right singular vector.
pub fn svd<T: Real>(m: &MatR<T>) -> Result<SvdTriple<T>> {
    if !m.is_square() {
        return Err(QsvdError::InvalidInput(format!("svd expects a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    if !m.is_finite() {
        return Err(QsvdError::InvalidInput("svd input has non-finite entries".into()));
    }
    let n = m.rows();
    let eps = T::epsilon();

    // column-major working copies
    let mut a: Vec<Vec<T>> = (0..n).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<T>> = (0..n).map(|j| unit(n, j)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<T> = a.iter().map(|col| norm2(col)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap_or(std::cmp::Ordering::Equal));
    let smax = order.first().map_or(T::zero(), |&i| sv[i]);
    let null_tol = smax * eps * T::lit(n as f64);

    let mut ucols: Vec<Option<Vec<T>>> = Vec::with_capacity(n);
    let mut vcols: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for &k in &order {
        let sk = sv[k];
        if sk > null_tol && sk > T::zero() {
            ucols.push(Some(a[k].iter().map(|&x| x / sk).collect()));
        } else {
            ucols.push(None);
            sv[k] = T::zero();
        }
        s.push(sv[k]);
        vcols.push(v[k].clone());
    }
    let mut ucols = complete_basis(n, ucols);

    for j in 0..n {
        let lead = ucols[j]
            .iter()
            .enumerate()
            .fold((0, T::zero()), |best, (i, &x)| if x.abs() > best.1 { (i, x.abs()) } else { best })
            .0;
        if ucols[j][lead] < T::zero() {
            ucols[j].iter_mut().for_each(|x| *x = -*x);
            vcols[j].iter_mut().for_each(|x| *x = -*x);
        }
    }

    Ok(SvdTriple { u: MatR::from_fn(n, n, |i, j| ucols[j][i]), s, v: MatR::from_fn(n, n, |i, j| vcols[j][i]) })
}

fn unit<T: Real>(n: usize, j: usize) -> Vec<T> {
    let mut e = vec![T::zero(); n];
    e[j] = T::one();
    e
}

fn rotate<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fill missing columns with an orthonormal complement (Gram-Schmidt against
/// the standard basis, two passes).
fn complete_basis<T: Real>(n: usize, cols: Vec<Option<Vec<T>>>) -> Vec<Vec<T>> {
    let mut basis: Vec<Vec<T>> = cols.iter().flatten().cloned().collect();
    let mut candidates = (0..n).map(|j| unit::<T>(n, j));
    let mut fill = Vec::new();
    while basis.len() < n {
        let Some(mut e) = candidates.next() else { break };
        for _ in 0..2 {
            for b in &basis {
                let d = dot(&e, b);
                e.iter_mut().zip(b).for_each(|(x, &y)| *x -= d * y);
            }
        }
        let nrm = norm2(&e);
        if nrm > T::lit(0.5) {
            e.iter_mut().for_each(|x| *x /= nrm);
            basis.push(e.clone());
            fill.push(e);
        }
    }
    let mut fill = fill.into_iter();
    cols.into_iter().map(|c| c.unwrap_or_else(|| fill.next().expect("complement"))).collect()
}

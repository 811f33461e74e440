//! Deterministic reductions and least-squares fits.

use crate::real::Real;
use nalgebra::{DMatrix, DVector};

/// Pairwise (balanced binary tree) reduction in index order. The result
/// depends only on the sequence, never on how it was produced.
pub fn tree_reduce<A, F>(mut items: Vec<A>, combine: F) -> Option<A>
where
    F: Fn(A, A) -> A,
{
    if items.is_empty() {
        return None;
    }
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr<T: Real>(xs: &[T]) -> (T, T) {
    let n = xs.len();
    if n == 0 {
        return (T::zero(), T::zero());
    }
    let nf = T::from_usize_lossy(n);
    let mean = xs.iter().fold(T::zero(), |a, &x| a + x) / nf;
    if n < 2 {
        return (mean, T::zero());
    }
    let var = xs.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean)) / (nf - T::one());
    (mean, (var / nf).sqrt())
}

/// Weighted polynomial least-squares fit y ≈ Σ_p c_p t^p.
#[derive(Debug, Clone)]
pub struct PolyFit<T: Real> {
    pub coef: Vec<T>,
    /// (XᵀWX)⁻¹; the coefficient covariance when weights are 1/σ².
    pub cov: DMatrix<T>,
    /// Rows of (XᵀWX)⁻¹XᵀW: coef = functional · y. Lets callers push
    /// per-sample data through the same linear estimator.
    pub functional: DMatrix<T>,
    pub chi2: T,
}

pub fn polyfit_weighted<T: Real>(ts: &[T], ys: &[T], ws: &[T], degree: usize) -> Option<PolyFit<T>> {
    let n = ts.len();
    if n != ys.len() || n != ws.len() || n <= degree {
        return None;
    }
    let p = degree + 1;
    let x = DMatrix::<T>::from_fn(n, p, |i, j| ts[i].powi(j as i32));
    let w = DMatrix::<T>::from_diagonal(&DVector::from_column_slice(ws));
    let xtw = x.transpose() * &w;
    let normal = &xtw * &x;
    let cov = normal.clone().try_inverse()?;
    let functional = &cov * &xtw;
    let coef_v = &functional * DVector::from_column_slice(ys);
    let resid = DVector::from_column_slice(ys) - &x * &coef_v;
    let chi2 = (0..n).fold(T::zero(), |a, i| a + ws[i] * resid[i] * resid[i]);
    Some(PolyFit {
        coef: coef_v.iter().copied().collect(),
        cov,
        functional,
        chi2,
    })
}

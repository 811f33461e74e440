//! Dense complex helpers on nalgebra matrices.

use crate::real::{cabs, czero, Real, C};
use crate::{CMatrix, CVector};
use nalgebra::DMatrix;

/// ⟨u, v⟩, antilinear in the first slot.
pub fn inner<T: Real>(u: &[C<T>], v: &[C<T>]) -> C<T> {
    assert_eq!(u.len(), v.len());
    let mut acc = czero::<T>();
    for (a, b) in u.iter().zip(v) {
        acc += a.conj() * b;
    }
    acc
}

pub fn norm<T: Real>(v: &[C<T>]) -> T {
    let mut s = T::zero();
    for z in v {
        s += z.norm_sqr();
    }
    s.sqrt()
}

pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)))
}

pub fn hermitian_part<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let half = T::lit(0.5);
    (m + m.adjoint()).map(|z| z * half)
}

/// Max entrywise deviation from Hermiticity.
pub fn hermiticity_error<T: Real>(m: &CMatrix<T>) -> T {
    max_abs(&(m - m.adjoint()))
}

pub fn real_to_complex<T: Real>(m: &DMatrix<T>) -> CMatrix<T> {
    m.map(|x| C::new(x, T::zero()))
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(m: &CMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(T::zero(), |a, &s| a.max(s))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues<T: Real>(m: &CMatrix<T>) -> Vec<T> {
    let h = hermitian_part(m);
    let mut ev: Vec<T> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Minimum eigenvalue of (M + M†)/2.
pub fn min_hermitian_part_eigenvalue<T: Real>(m: &CMatrix<T>) -> T {
    hermitian_eigenvalues(m)
        .first()
        .copied()
        .unwrap_or_else(T::zero)
}

#[derive(Debug, Clone)]
pub struct SolveError {
    pub residual: f64,
}

impl std::fmt::Display for SolveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "linear solve failed (relative residual {:.3e})", self.residual)
    }
}

impl std::error::Error for SolveError {}

/// LU factorisation reused for several right-hand sides, with iterative refinement.
pub struct RefinedLu<T: Real> {
    a: CMatrix<T>,
    lu: nalgebra::LU<C<T>, nalgebra::Dyn, nalgebra::Dyn>,
    pub tol: T,
}

impl<T: Real> RefinedLu<T> {
    pub fn new(a: CMatrix<T>) -> Self {
        let lu = a.clone().lu();
        Self {
            a,
            lu,
            tol: T::lit(1e-10),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Solve A X = B column-wise; up to three refinement sweeps.
    pub fn solve(&self, b: &CMatrix<T>) -> Result<CMatrix<T>, SolveError> {
        let mut x = self.lu.solve(b).ok_or(SolveError {
            residual: f64::INFINITY,
        })?;
        let bnorm = b.norm();
        if bnorm == T::zero() {
            return Ok(x);
        }
        let mut rel = T::zero();
        for _ in 0..3 {
            let r = b - &self.a * &x;
            rel = r.norm() / bnorm;
            if rel <= self.tol * T::lit(1e-3) {
                return Ok(x);
            }
            match self.lu.solve(&r) {
                Some(dx) => x += dx,
                None => break,
            }
        }
        let r = b - &self.a * &x;
        let rel_final = r.norm() / bnorm;
        rel = rel.min(rel_final);
        if rel_final <= self.tol || rel <= self.tol {
            Ok(x)
        } else {
            Err(SolveError {
                residual: rel_final.as_f64(),
            })
        }
    }

    pub fn solve_vec(&self, b: &CVector<T>) -> Result<CVector<T>, SolveError> {
        let m = CMatrix::from_column_slice(b.len(), 1, b.as_slice());
        let x = self.solve(&m)?;
        Ok(CVector::from_column_slice(x.as_slice()))
    }
}

/// Orthonormal basis (as columns) of the complement of a unit real vector `u`.
/// Uses the Householder reflection exchanging e₁ and u.
pub fn orthonormal_complement<T: Real>(u: &[T]) -> DMatrix<T> {
    let n = u.len();
    let mut w: Vec<T> = u.to_vec();
    // pick sign to avoid cancellation
    let s = if u[0] >= T::zero() { T::one() } else { -T::one() };
    w[0] += s;
    let wn: T = w.iter().fold(T::zero(), |a, &x| a + x * x);
    let mut h = DMatrix::<T>::identity(n, n);
    if wn > T::zero() {
        let two = T::lit(2.0) / wn;
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] -= two * w[i] * w[j];
            }
        }
    }
    // first column of h is ∓u; the rest span u^⊥
    h.columns(1, n - 1).into_owned()
}

/// Orthonormal basis of the column span, dropping singular values ≤ `tol`.
/// Returns (basis, all singular values).
pub fn range_basis<T: Real>(m: &CMatrix<T>, tol: T) -> (CMatrix<T>, Vec<T>) {
    let nr = m.nrows();
    if m.ncols() == 0 {
        return (CMatrix::zeros(nr, 0), vec![]);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested u");
    let sv: Vec<T> = svd.singular_values.iter().copied().collect();
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > tol).collect();
    let mut b = CMatrix::zeros(nr, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        b.set_column(c, &u.column(i));
    }
    (b, sv)
}

/// Orthonormal basis of the orthogonal complement of span(cols of `q`) in ℂⁿ.
pub fn complement_basis<T: Real>(q: &CMatrix<T>) -> CMatrix<T> {
    let n = q.nrows();
    let k = q.ncols();
    if k == 0 {
        return CMatrix::identity(n, n);
    }
    // full SVD of [q | 0] padded to square gives a full U
    let mut padded = CMatrix::zeros(n, n.max(k));
    padded.columns_mut(0, k).copy_from(q);
    let svd = padded.svd(true, false);
    let u = svd.u.unwrap();
    let sv = svd.singular_values;
    let scale = sv.iter().fold(T::one(), |a, &s| a.max(s));
    let thr = T::lit(1e-10) * scale;
    let idx: Vec<usize> = (0..n).filter(|&i| i >= sv.len() || sv[i] <= thr).collect();
    let mut b = CMatrix::zeros(n, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        b.set_column(c, &u.column(i));
    }
    b
}

/// Nullspace basis: right singular vectors with σ ≤ tol.
pub fn null_basis<T: Real>(m: &CMatrix<T>, tol: T) -> CMatrix<T> {
    let n = m.ncols();
    let rows = m.nrows().max(n);
    let mut sq = CMatrix::zeros(rows, n);
    sq.rows_mut(0, m.nrows()).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.unwrap();
    let sv = svd.singular_values;
    let idx: Vec<usize> = (0..n).filter(|&i| sv[i] <= tol).collect();
    let mut b = CMatrix::zeros(n, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        let row = vt.row(i);
        for r in 0..n {
            b[(r, c)] = row[r].conj();
        }
    }
    b
}

//! Restarted GMRES with right preconditioning on complex vectors.

use crate::dense::{inner, norm};
use crate::real::{czero, Real, C};

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            restart: 60,
            max_iter: 4000,
            rel_tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresInfo {
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Solve A x = b. `apply` is A, `precond` approximates A⁻¹ (right preconditioner).
/// The returned residual is the true one, recomputed at the end.
pub fn gmres<T, A, P>(apply: A, precond: P, b: &[C<T>], opts: GmresOptions) -> (Vec<C<T>>, GmresInfo)
where
    T: Real,
    A: Fn(&[C<T>]) -> Vec<C<T>>,
    P: Fn(&[C<T>]) -> Vec<C<T>>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![czero::<T>(); n];
    if bnorm == T::zero() {
        return (
            x,
            GmresInfo {
                iterations: 0,
                rel_residual: 0.0,
                converged: true,
            },
        );
    }
    let tol = T::lit(opts.rel_tol) * bnorm;
    let m = opts.restart.max(1);
    let mut total = 0usize;
    let mut r: Vec<C<T>> = b.to_vec();
    loop {
        let beta = norm(&r);
        if beta <= tol || total >= opts.max_iter {
            break;
        }
        let mut v: Vec<Vec<C<T>>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<C<T>>> = Vec::with_capacity(m);
        v.push(r.iter().map(|&e| e / C::new(beta, T::zero())).collect());
        let mut h = vec![vec![czero::<T>(); m]; m + 1];
        let mut cs = vec![czero::<T>(); m];
        let mut sn = vec![czero::<T>(); m];
        let mut g = vec![czero::<T>(); m + 1];
        g[0] = C::new(beta, T::zero());
        let mut k_used = 0;
        for j in 0..m {
            let zj = precond(&v[j]);
            let mut w = apply(&zj);
            z.push(zj);
            for i in 0..=j {
                let hij = inner(&v[i], &w);
                h[i][j] = hij;
                for (we, ve) in w.iter_mut().zip(&v[i]) {
                    *we -= hij * *ve;
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = C::new(hn, T::zero());
            // apply previous rotations
            for i in 0..j {
                let t0 = cs[i].conj() * h[i][j] + sn[i].conj() * h[i + 1][j];
                let t1 = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t0;
                h[i + 1][j] = t1;
            }
            let a = h[j][j];
            let bb = h[j + 1][j];
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == T::zero() {
                cs[j] = C::new(T::one(), T::zero());
                sn[j] = czero();
            } else {
                cs[j] = a / C::new(den, T::zero());
                sn[j] = bb / C::new(den, T::zero());
            }
            h[j][j] = cs[j].conj() * a + sn[j].conj() * bb;
            h[j + 1][j] = czero();
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j].conj() * g[j];
            total += 1;
            k_used = j + 1;
            let res = g[j + 1].re.hypot(g[j + 1].im);
            if res <= tol || total >= opts.max_iter || hn == T::zero() {
                break;
            }
            v.push(w.iter().map(|&e| e / C::new(hn, T::zero())).collect());
        }
        // back substitution
        let mut y = vec![czero::<T>(); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for l in (i + 1)..k_used {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        for (l, yl) in y.iter().enumerate() {
            for (xe, ze) in x.iter_mut().zip(&z[l]) {
                *xe += *yl * *ze;
            }
        }
        let ax = apply(&x);
        for i in 0..n {
            r[i] = b[i] - ax[i];
        }
    }
    let rel = (norm(&r) / bnorm).as_f64();
    (
        x,
        GmresInfo {
            iterations: total,
            rel_residual: rel,
            converged: rel <= opts.rel_tol * 10.0,
        },
    )
}

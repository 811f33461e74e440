//! Matrix exponential.
//!
//! Dense: scaling and squaring with the degree-13 Padé approximant
//! (Higham 2005). Large operators: Arnoldi/Krylov evaluation of e^{tA}v
//! with sub-stepping.

use crate::dense::{norm, RefinedLu};
use crate::real::{czero, Real, C};
use crate::{CMatrix, CVector};

const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm<T: Real>(a: &CMatrix<T>) -> T {
    let mut best = T::zero();
    for j in 0..a.ncols() {
        let s = a.column(j).iter().fold(T::zero(), |acc, z| acc + z.re.hypot(z.im));
        best = best.max(s);
    }
    best
}

/// e^{A} for a dense complex matrix.
pub fn expm<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return a.clone();
    }
    let nrm = one_norm(a).as_f64();
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scale = T::lit(2f64.powi(-s));
    let a1 = a.map(|z| z * scale);
    let id = CMatrix::<T>::identity(n, n);
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |i: usize| C::new(T::lit(B13[i]), T::zero());

    let inner_u = &a6 * (a6.map(|z| z * b(13)) + a4.map(|z| z * b(11)) + a2.map(|z| z * b(9)));
    let u_poly = inner_u
        + a6.map(|z| z * b(7))
        + a4.map(|z| z * b(5))
        + a2.map(|z| z * b(3))
        + id.map(|z| z * b(1));
    let u = &a1 * u_poly;
    let inner_v = &a6 * (a6.map(|z| z * b(12)) + a4.map(|z| z * b(10)) + a2.map(|z| z * b(8)));
    let v = inner_v
        + a6.map(|z| z * b(6))
        + a4.map(|z| z * b(4))
        + a2.map(|z| z * b(2))
        + id.map(|z| z * b(0));

    let p = &v + &u;
    let q = &v - &u;
    let mut r = match q.clone().lu().solve(&p) {
        Some(r) => r,
        None => RefinedLu::new(q).solve(&p).expect("Padé denominator singular"),
    };
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// e^{tA}v through an Arnoldi basis of dimension ≤ `m`, splitting t so that
/// each sub-step has ‖A‖₁·|dt| ≤ 2.
pub fn expm_krylov<T, F>(apply: F, a_norm: T, v: &CVector<T>, t: T, m: usize) -> CVector<T>
where
    T: Real,
    F: Fn(&CVector<T>) -> CVector<T>,
{
    let n = v.len();
    let m = m.min(n).max(1);
    let span = (a_norm * t.abs()).as_f64();
    let steps = ((span / 2.0).ceil() as usize).max(1);
    let dt = t / T::from_usize_lossy(steps);
    let mut w = v.clone();
    for _ in 0..steps {
        w = krylov_step(&apply, &w, dt, m);
    }
    w
}

fn krylov_step<T, F>(apply: &F, v: &CVector<T>, dt: T, m: usize) -> CVector<T>
where
    T: Real,
    F: Fn(&CVector<T>) -> CVector<T>,
{
    let beta = norm(v.as_slice());
    if beta == T::zero() {
        return v.clone();
    }
    let mut basis: Vec<CVector<T>> = Vec::with_capacity(m + 1);
    basis.push(v.map(|z| z / C::new(beta, T::zero())));
    let mut h = CMatrix::<T>::zeros(m + 1, m);
    let mut used = m;
    for j in 0..m {
        let mut w = apply(&basis[j]);
        for (i, bi) in basis.iter().enumerate() {
            let hij = bi.dotc(&w);
            h[(i, j)] = hij;
            w.axpy(-hij, bi, C::new(T::one(), T::zero()));
        }
        // second pass of Gram-Schmidt for stability
        for (i, bi) in basis.iter().enumerate() {
            let c = bi.dotc(&w);
            h[(i, j)] += c;
            w.axpy(-c, bi, C::new(T::one(), T::zero()));
        }
        let hn = norm(w.as_slice());
        h[(j + 1, j)] = C::new(hn, T::zero());
        if hn <= T::lit(1e-13) * beta.max(T::one()) {
            used = j + 1;
            break;
        }
        if j + 1 < m {
            basis.push(w.map(|z| z / C::new(hn, T::zero())));
        }
    }
    let hm = h.view((0, 0), (used, used)).map(|z| z * C::new(dt, T::zero()));
    let e = expm(&hm);
    let mut out = CVector::<T>::from_element(v.len(), czero());
    for j in 0..used {
        let coef = e[(j, 0)] * C::new(beta, T::zero());
        out.axpy(coef, &basis[j], C::new(T::one(), T::zero()));
    }
    out
}

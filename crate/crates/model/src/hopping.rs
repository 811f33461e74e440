use crate::error::ModelError;
use crate::lattice::LatticeSpec;
use fluxlat_numeric::{real::cabs, Real, C};
use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct HoppingEntry<T: Real> {
    pub zeta: Vec<i64>,
    pub amp: C<T>,
}

/// Finite-support kernel ζ ↦ h(ζ); (H₀ψ)(x) = Σ_ζ h(ζ) ψ(x − ζ).
#[derive(Debug, Clone, PartialEq)]
pub struct HoppingKernel<T: Real> {
    pub entries: Vec<HoppingEntry<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoppingReport<T: Real> {
    pub self_adjoint: bool,
    pub m0: T,
    pub m1: T,
    pub m: T,
    pub nondegenerate: bool,
    /// Smallest eigenvalue of Σ|h|² ζζᵀ.
    pub gram_min_eig: T,
}

fn key(z: &[i64]) -> String {
    format!("{z:?}")
}

fn euclid<T: Real>(z: &[i64]) -> T {
    T::lit((z.iter().map(|&c| (c * c) as f64).sum::<f64>()).sqrt())
}

impl<T: Real> HoppingKernel<T> {
    pub fn new(entries: Vec<(Vec<i64>, C<T>)>) -> Self {
        Self {
            entries: entries.into_iter().map(|(zeta, amp)| HoppingEntry { zeta, amp }).collect(),
        }
    }

    /// h(±e_i) = t along every axis.
    pub fn nearest_neighbour(dimension: usize, t: T) -> Self {
        let mut e = Vec::new();
        for axis in 0..dimension {
            for s in [1i64, -1] {
                let mut z = vec![0; dimension];
                z[axis] = s;
                e.push((z, C::new(t, T::zero())));
            }
        }
        Self::new(e)
    }

    pub fn get(&self, zeta: &[i64]) -> Option<C<T>> {
        self.entries.iter().find(|e| e.zeta == zeta).map(|e| e.amp)
    }

    /// Largest |ζ_i| over the support.
    pub fn reach(&self) -> i64 {
        self.entries
            .iter()
            .flat_map(|e| e.zeta.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Every |ζ_i| < N/2, so distinct entries land on distinct ring residues.
    pub fn check_fits(&self, lattice: &LatticeSpec) -> Result<(), ModelError> {
        let half = lattice.extent as f64 / 2.0;
        for e in &self.entries {
            if e.zeta.len() != lattice.dimension {
                return Err(ModelError::HopDimension {
                    key: key(&e.zeta),
                    got: e.zeta.len(),
                    want: lattice.dimension,
                });
            }
            if e.zeta.iter().any(|&c| (c.abs() as f64) >= half) {
                return Err(ModelError::HopTooLong { key: key(&e.zeta), half });
            }
        }
        Ok(())
    }

    /// ε(k) = Σ_ζ h(ζ) e^{−ik·ζ}, the plane-wave eigenvalue of H₀.
    pub fn dispersion(&self, k: &[T]) -> T {
        let mut acc = C::new(T::zero(), T::zero());
        for e in &self.entries {
            let phase = e.zeta.iter().zip(k).fold(T::zero(), |a, (&z, &kk)| a + kk * T::lit(z as f64));
            acc += e.amp * fluxlat_numeric::cis(-phase);
        }
        acc.re
    }
}

/// Checks the kernel against the short-range, self-adjoint and non-degenerate
/// requirements and reports the norms m₀, m₁, m.
pub fn validate_hopping<T: Real>(h: &HoppingKernel<T>, d: usize) -> Result<HoppingReport<T>, ModelError> {
    if h.entries.is_empty() {
        return Err(ModelError::EmptySupport);
    }
    for (i, e) in h.entries.iter().enumerate() {
        if e.zeta.len() != d {
            return Err(ModelError::HopDimension {
                key: key(&e.zeta),
                got: e.zeta.len(),
                want: d,
            });
        }
        if e.zeta.iter().all(|&c| c == 0) {
            return Err(ModelError::ZeroHop { key: key(&e.zeta) });
        }
        if h.entries[..i].iter().any(|o| o.zeta == e.zeta) {
            return Err(ModelError::DuplicateHop { key: key(&e.zeta) });
        }
    }
    let tol = T::lit(1e-14);
    let mut self_adjoint = true;
    for e in &h.entries {
        let neg: Vec<i64> = e.zeta.iter().map(|c| -c).collect();
        match h.get(&neg) {
            Some(a) if cabs(a - e.amp.conj()) <= tol * (T::one() + cabs(e.amp)) => {}
            _ => self_adjoint = false,
        }
    }
    let mut m0 = T::zero();
    let mut m1 = T::zero();
    let mut gram = DMatrix::<T>::zeros(d, d);
    for e in &h.entries {
        let a = cabs(e.amp);
        let r: T = euclid(&e.zeta);
        m0 += a;
        m1 += r * a;
        let w = a * a;
        for i in 0..d {
            for j in 0..d {
                gram[(i, j)] += w * T::lit((e.zeta[i] * e.zeta[j]) as f64);
            }
        }
    }
    let ev = gram.symmetric_eigenvalues();
    let gram_min_eig = ev.iter().fold(ev[0], |a, &b| a.min(b));
    let scale = ev.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    let nondegenerate = gram_min_eig > T::lit(1e-12) * scale.max(T::one());
    Ok(HoppingReport {
        self_adjoint,
        m0,
        m1,
        m: m0 + m1,
        nondegenerate,
        gram_min_eig,
    })
}

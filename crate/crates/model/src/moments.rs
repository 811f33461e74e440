use crate::error::ModelError;
use crate::lattice::LatticeSpec;
use fluxlat_numeric::{cis, Real, C};
use nalgebra::DMatrix;

/// Mass, second-moment matrix and the weights they came from.
#[derive(Debug, Clone)]
pub struct PositionMoments<T: Real> {
    pub total: T,
    /// M_ij = Σ_x x_i x_j p(x), x in minimal image.
    pub m: DMatrix<T>,
    lattice: LatticeSpec,
    weights: Vec<T>,
}

impl<T: Real> PositionMoments<T> {
    pub fn charfn(&self, k: &[T]) -> C<T> {
        charfn(&self.weights, &self.lattice, k)
    }
}

pub fn position_moments<T: Real>(p: &[T], lattice: &LatticeSpec) -> Result<PositionMoments<T>, ModelError> {
    let n = lattice.sites();
    if p.len() != n {
        return Err(ModelError::SizeMismatch { expected: n, got: p.len() });
    }
    let d = lattice.dimension;
    let mut m = DMatrix::<T>::zeros(d, d);
    let mut total = T::zero();
    for (site, &w) in p.iter().enumerate() {
        if w < T::zero() {
            return Err(ModelError::NegativeWeight {
                site,
                value: w.as_f64(),
            });
        }
        total += w;
        let x = lattice.position(site);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] += T::lit((x[i] * x[j]) as f64) * w;
            }
        }
    }
    Ok(PositionMoments {
        total,
        m,
        lattice: *lattice,
        weights: p.to_vec(),
    })
}

/// Σ_x e^{ik·x} p(x), x in minimal image.
pub fn charfn<T: Real>(p: &[T], lattice: &LatticeSpec, k: &[T]) -> C<T> {
    let mut acc = C::new(T::zero(), T::zero());
    for (site, &w) in p.iter().enumerate() {
        if w == T::zero() {
            continue;
        }
        let x = lattice.position(site);
        let phase = x.iter().zip(k).fold(T::zero(), |a, (&xi, &ki)| a + ki * T::lit(xi as f64));
        acc += cis(phase) * w;
    }
    acc
}

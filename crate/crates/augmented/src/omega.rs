use crate::error::AugmentedError;
use fluxlat_model::{DisorderKind, DisorderSpec, LatticeSpec};
use fluxlat_noise::JointSpace;
use fluxlat_numeric::Real;

/// Enumerated disorder space Ω = {±λ}^sites (or a single zero configuration).
/// Configuration bit y set means ω(y) = +λ.
#[derive(Debug, Clone)]
pub struct OmegaSpace<T: Real> {
    pub lambda: T,
    pub space: JointSpace,
    trivial: bool,
}

impl<T: Real> OmegaSpace<T> {
    pub fn new(spec: &DisorderSpec<T>, lattice: &LatticeSpec) -> Result<Self, AugmentedError> {
        let n = lattice.sites();
        let lambda = spec.strength();
        let trivial = lambda == T::zero();
        if !trivial && spec.kind != DisorderKind::Bernoulli {
            return Err(AugmentedError::NotEnumerable);
        }
        let space = if trivial {
            JointSpace::new(vec![1; n])
        } else {
            JointSpace::uniform(2, n)
        }
        .ok_or(AugmentedError::Budget {
            dim: usize::MAX,
            budget: 0,
        })?;
        Ok(Self {
            lambda,
            space,
            trivial,
        })
    }

    pub fn count(&self) -> usize {
        self.space.dim
    }

    /// μ(ω), uniform.
    pub fn weight(&self) -> T {
        T::one() / T::from_usize_lossy(self.count())
    }

    pub fn value(&self, w: usize, site: usize) -> T {
        if self.trivial {
            T::zero()
        } else if self.space.state_of(w, site) == 1 {
            self.lambda
        } else {
            -self.lambda
        }
    }

    pub fn values(&self, w: usize) -> Vec<T> {
        (0..self.space.sites()).map(|y| self.value(w, y)).collect()
    }

    pub fn index_of(&self, values: &[T]) -> usize {
        if self.trivial {
            return 0;
        }
        let bits: Vec<usize> = values.iter().map(|&v| usize::from(v > T::zero())).collect();
        self.space.encode(&bits)
    }

    pub fn shift_table(&self, lattice: &LatticeSpec, zeta: &[i64]) -> Vec<usize> {
        if self.trivial {
            vec![0]
        } else {
            self.space.shift_table(lattice, zeta)
        }
    }
}

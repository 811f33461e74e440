use crate::error::ModelError;
use fluxlat_numeric::{dense, CMatrix, Real, C};

/// Amplitudes ψ(x), one per site.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction<T: Real> {
    pub amplitudes: Vec<C<T>>,
}

impl<T: Real> WaveFunction<T> {
    pub fn delta(sites: usize, at: usize) -> Self {
        let mut a = vec![C::new(T::zero(), T::zero()); sites];
        a[at] = C::new(T::one(), T::zero());
        Self { amplitudes: a }
    }

    pub fn norm(&self) -> T {
        dense::norm(&self.amplitudes)
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - T::one()).abs() <= T::lit(1e-12)
    }

    pub fn density(&self) -> Vec<T> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// ρ(x, y).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    pub entries: CMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// ψ⟨ψ, ·⟩
    pub fn pure(psi: &WaveFunction<T>) -> Self {
        let n = psi.amplitudes.len();
        let entries = CMatrix::from_fn(n, n, |x, y| psi.amplitudes[x] * psi.amplitudes[y].conj());
        Self { entries }
    }

    pub fn from_matrix(entries: CMatrix<T>) -> Result<Self, ModelError> {
        if entries.nrows() != entries.ncols() {
            return Err(ModelError::SizeMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        Ok(Self { entries })
    }

    pub fn trace(&self) -> C<T> {
        self.entries.trace()
    }

    pub fn hermiticity_error(&self) -> T {
        dense::hermiticity_error(&self.entries)
    }

    pub fn sites(&self) -> usize {
        self.entries.nrows()
    }
}

use fluxlat_numeric::Real;
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionMethod {
    Slope,
    Tauberian,
    Schur,
}

impl DiffusionMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Slope => "slope",
            Self::Tauberian => "tauberian",
            Self::Schur => "schur",
        }
    }
}

/// A d×d diffusion matrix with its uncertainty and provenance.
#[derive(Debug, Clone)]
pub struct DiffusionEstimate<T: Real> {
    pub d: DMatrix<T>,
    /// Statistical standard error (slope) or a numerical tolerance (exact routes).
    pub stderr: DMatrix<T>,
    pub method: DiffusionMethod,
    /// Fit window in time, or the (smallest, largest) η for the Tauberian route.
    pub window: (T, T),
    /// Largest |Im D_ij| discarded when forming the real matrix.
    pub imag_max: T,
    pub flags: Vec<String>,
}

impl<T: Real> DiffusionEstimate<T> {
    pub fn dimension(&self) -> usize {
        self.d.nrows()
    }

    pub fn asymmetry(&self) -> T {
        (&self.d - self.d.transpose()).abs().max()
    }

    pub fn min_eigenvalue(&self) -> T {
        let s = (&self.d + self.d.transpose()) * T::lit(0.5);
        s.symmetric_eigenvalues().iter().fold(T::lit(f64::INFINITY), |a, &x| a.min(x))
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue() > T::zero()
    }

    /// ½⟨k, D k⟩
    pub fn quadratic_form(&self, k: &[T]) -> T {
        let n = self.dimension();
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                s += k[i] * self.d[(i, j)] * k[j];
            }
        }
        s * T::lit(0.5)
    }
}

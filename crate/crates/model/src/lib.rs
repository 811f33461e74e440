//! Lattice Schrödinger model on a periodic box ℤ_N^d: geometry, hopping
//! kernel, static disorder, Hamiltonian and position moments.

mod diffusion;
mod disorder;
mod error;
mod hamiltonian;
mod hopping;
mod lattice;
mod moments;
mod state;

pub use diffusion::{DiffusionEstimate, DiffusionMethod};
pub use disorder::{sample_disorder, DisorderKind, DisorderSample, DisorderSpec};
pub use error::ModelError;
pub use hamiltonian::{build_hamiltonian, build_kinetic};
pub use hopping::{validate_hopping, HoppingEntry, HoppingKernel, HoppingReport};
pub use lattice::{minimal_image, minimal_image_component, LatticeSpec};
pub use moments::{charfn, position_moments, PositionMoments};
pub use state::{DensityMatrix, WaveFunction};

use fluxlat_numeric::Real;

/// Lattice, hopping and disorder law bundled together.
#[derive(Debug, Clone)]
pub struct Model<T: Real> {
    pub lattice: LatticeSpec,
    pub hopping: HoppingKernel<T>,
    pub disorder: DisorderSpec<T>,
}

impl<T: Real> Model<T> {
    /// Validates the kernel and checks that it fits the box without aliasing.
    pub fn new(lattice: LatticeSpec, hopping: HoppingKernel<T>, disorder: DisorderSpec<T>) -> Result<Self, ModelError> {
        let report = validate_hopping(&hopping, lattice.dimension)?;
        if !report.self_adjoint {
            return Err(ModelError::NotSelfAdjoint);
        }
        hopping.check_fits(&lattice)?;
        disorder.validate()?;
        Ok(Self {
            lattice,
            hopping,
            disorder,
        })
    }

    /// d=1 (or d) nearest-neighbour model with unit hopping.
    pub fn nearest_neighbour(dimension: usize, extent: usize, disorder: DisorderSpec<T>) -> Result<Self, ModelError> {
        let lattice = LatticeSpec::new(dimension, extent)?;
        Self::new(lattice, HoppingKernel::nearest_neighbour(dimension, T::one()), disorder)
    }
}

pub type Hopping = HoppingKernel<f64>;
pub type Disorder = DisorderSpec<f64>;
pub type Sample = DisorderSample<f64>;
pub type Psi = WaveFunction<f64>;
pub type Rho = DensityMatrix<f64>;
pub type Moments = PositionMoments<f64>;
pub type LatticeModel = Model<f64>;
pub type Diffusion = DiffusionEstimate<f64>;

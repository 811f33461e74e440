use fluxlat_model::ModelError;
use fluxlat_noise::NoiseError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AugmentedError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("dimension {dim} exceeds the dense budget {budget}")]
    Budget { dim: usize, budget: usize },
    #[error("disorder law is not enumerable; exact fibre needs bernoulli or no disorder")]
    NotEnumerable,
    #[error("momentum component {k} is not a multiple of 2pi/{extent}")]
    Inadmissible { k: f64, extent: usize },
    #[error("Re w = {re} must be positive")]
    NotAccretive { re: f64 },
    #[error("linear solve failed (relative residual {residual:e})")]
    Solve { residual: f64 },
    #[error("restricted M is singular")]
    Singular,
    #[error("matrix is not normal (defect {defect:e})")]
    NotNormal { defect: f64 },
    #[error("parameter grid must be positive and strictly {order}")]
    Grid { order: &'static str },
    #[error("density matrix must be Hermitian with unit trace")]
    BadDensity,
    #[error("{0}")]
    Shape(String),
}

impl From<fluxlat_numeric::dense::SolveError> for AugmentedError {
    fn from(e: fluxlat_numeric::dense::SolveError) -> Self {
        AugmentedError::Solve {
            residual: e.residual,
        }
    }
}

use fluxlat_model::ModelError;
use fluxlat_noise::NoiseError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("non-finite wave function at t = {t} (norm {norm})")]
    NonFinite { t: f64, norm: f64 },
    #[error("spectral reconstruction error {error:e} exceeds 1e-10")]
    Reconstruction { error: f64 },
    #[error("time step {dt} must be positive and at most the checkpoint spacing {spacing}")]
    Step { dt: f64, spacing: f64 },
    #[error("checkpoints must be non-negative and strictly increasing")]
    Checkpoints,
    #[error("sample budget {got} below the minimum {min}")]
    Budget { got: usize, min: usize },
    #[error("fit window [{lo}, {hi}] holds {got} checkpoints, need at least {need}")]
    Window { lo: f64, hi: f64, got: usize, need: usize },
    #[error("time {t} is not a checkpoint")]
    NotCheckpoint { t: f64 },
    #[error("{site_count} sites exceed the dense spectral budget {budget}")]
    DenseBudget { site_count: usize, budget: usize },
    #[error("k vector has dimension {got}, lattice has {want}")]
    KDimension { got: usize, want: usize },
}

//! Monte Carlo for i∂ψ = (H₀ + U_ω + gV_{α(t)})ψ on a periodic box.
//!
//! The diagonal noise phase is integrated exactly along each sampled path,
//! so the only discretisation error is the Strang splitting between the
//! kinetic part and the diagonal part.

mod bound;
mod ensemble;
mod error;
mod fit;
mod phase;
mod plan;
mod propagate;

pub use bound::{check_apriori_bound, weighted_norm};
pub use ensemble::{
    default_dt, density_matrix_ensemble, run_ensemble, DensityEnsemble, EnsembleConfig, EnsembleResult, CHUNK,
    MIN_SAMPLES,
};
pub use error::TrajectoryError;
pub use fit::{
    clt_statistic, default_window, estimate_D_slope, fit_moments, CltReport, CltRow, SlopeFit, MIN_FIT_POINTS,
};
pub use phase::{integrate_phase, PhaseTracker};
pub use plan::{hermitian_eigen, Float, PropagatorPlan, Route, SPECTRAL_BUDGET};
pub use propagate::{propagate, Trajectory};

pub type Config = EnsembleConfig<f64>;
pub type Ensemble = EnsembleResult<f64>;
pub type Plan = PropagatorPlan<f64>;

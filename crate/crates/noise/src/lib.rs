//! Dynamic environment: independent continuous-time Markov chains, one per
//! site, with observable v.
//!
//! Convention: B generates the semigroup that conditions on the future,
//! e^{−tB} f(a) = E[f(α(0)) | α(t) = a]. For a stationary chain with forward
//! generator Q this is B = −diag(π)⁻¹ Qᵀ diag(π), i.e. B = −Q when the chain
//! is reversible. The backward semigroup E[f(α(t)) | α(0) = a] is e^{tQ}.

mod chain;
mod chi;
mod error;
mod generator;
mod kron;
mod path;

pub use chain::{stationary_distribution, SiteChain};
pub use chi::{nondegeneracy_chi, ChiMethod, ChiReport, ENUMERATION_BUDGET};
pub use error::NoiseError;
pub use generator::{
    apply_b_inverse, backward_expectation, build_generator_b, check_mixing, conditional_expectation, spectral_gap,
    GeneratorB, SiteFactor, DENSE_BUDGET,
};
pub use kron::{apply_site_matrix, JointSpace};
pub use path::{sample_path, JumpEvent, NoisePath, SitePath};

pub type Chain = SiteChain<f64>;
pub type Generator = GeneratorB<f64>;
pub type Path = NoisePath<f64>;

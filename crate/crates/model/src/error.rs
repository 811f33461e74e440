use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("lattice needs dimension ≥ 1 and extent ≥ 2 (got d={dimension}, N={extent})")]
    BadLattice { dimension: usize, extent: usize },
    #[error("hopping entry at zeta=0 is not allowed (key {key})")]
    ZeroHop { key: String },
    #[error("hopping support is empty")]
    EmptySupport,
    #[error("hopping entry {key} has dimension {got}, lattice dimension is {want}")]
    HopDimension { key: String, got: usize, want: usize },
    #[error("duplicate hopping entry {key}")]
    DuplicateHop { key: String },
    #[error("hopping kernel is not self-adjoint: h(-zeta) != conj h(zeta) at {key}")]
    NotSelfAdjointAt { key: String },
    #[error("hopping kernel is not self-adjoint")]
    NotSelfAdjoint,
    #[error("hopping entry {key} reaches |zeta_i| >= N/2 = {half}; wrapping would alias entries")]
    HopTooLong { key: String, half: f64 },
    #[error("disorder strength must be finite and ≥ 0 (got {0})")]
    BadStrength(f64),
    #[error("size mismatch: expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("negative weight {value} at site {site}")]
    NegativeWeight { site: usize, value: f64 },
}

use fluxlat_augmented::AugmentedError;
use fluxlat_model::ModelError;
use fluxlat_noise::NoiseError;
use fluxlat_trajectory::TrajectoryError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unreadable or malformed config, or a precondition that fails before any work.
    #[error("invalid value at {key}: {message}")]
    Validation { key: String, message: String },
    /// A hard invariant of the mathematics failed on the computed result.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// Time or size budget exhausted during the run.
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    /// Solver failure that is neither a user error nor a budget abort.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn validation(key: impl Into<String>, message: impl ToString) -> Self {
        CliError::Validation {
            key: key.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: &std::path::Path, e: impl ToString) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } | CliError::Io { .. } => 2,
            CliError::Invariant(_) | CliError::Numerical(_) => 3,
            CliError::Budget(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Validation { .. } => "validation",
            CliError::Invariant(_) => "invariant",
            CliError::Budget(_) => "budget",
            CliError::Io { .. } => "io",
            CliError::Numerical(_) => "numerical",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Validation { key, .. } = self {
            v["key"] = json!(key);
        }
        v
    }
}

impl From<AugmentedError> for CliError {
    fn from(e: AugmentedError) -> Self {
        match e {
            AugmentedError::Budget { .. } => CliError::Budget(e.to_string()),
            AugmentedError::Noise(NoiseError::Budget { .. }) => CliError::Budget(e.to_string()),
            AugmentedError::Model(m) => m.into(),
            AugmentedError::Noise(n) => n.into(),
            AugmentedError::NotEnumerable => CliError::validation("model.disorder.kind", e),
            AugmentedError::Inadmissible { .. } => CliError::validation("run.k_list", e),
            AugmentedError::Grid { .. } => CliError::validation("run", e),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::validation("model", e)
    }
}

impl From<NoiseError> for CliError {
    fn from(e: NoiseError) -> Self {
        match e {
            NoiseError::Budget { .. } => CliError::Budget(e.to_string()),
            NoiseError::Degenerate { .. } | NoiseError::NoGap { .. } => CliError::Invariant(e.to_string()),
            _ => CliError::validation("noise.chain", e),
        }
    }
}

impl From<TrajectoryError> for CliError {
    fn from(e: TrajectoryError) -> Self {
        match e {
            TrajectoryError::Model(m) => m.into(),
            TrajectoryError::Noise(n) => n.into(),
            TrajectoryError::NonFinite { .. } | TrajectoryError::Reconstruction { .. } => CliError::Invariant(e.to_string()),
            TrajectoryError::DenseBudget { .. } => CliError::Budget(e.to_string()),
            TrajectoryError::Budget { .. } => CliError::validation("run.samples", e),
            TrajectoryError::Window { .. } => CliError::validation("run.fit_window", e),
            TrajectoryError::Step { .. } => CliError::validation("run.dt", e),
            TrajectoryError::Checkpoints | TrajectoryError::NotCheckpoint { .. } => CliError::validation("run.checkpoints", e),
            TrajectoryError::KDimension { .. } => CliError::validation("run.k_list", e),
        }
    }
}

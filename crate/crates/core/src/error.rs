use thiserror::Error;

/// One violated configuration invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("dimension: {0}")]
    Dimension(String),
    #[error("power: {0}")]
    Power(String),
    #[error("antenna spacing d/lambda = {0} (closed forms require 0.5)")]
    Spacing(f64),
}

/// All invariant violations found while validating a [`SystemConfig`](crate::SystemConfig).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl ConfigError {
    pub fn has_dimension_error(&self) -> bool {
        self.violations.iter().any(|v| matches!(v, Violation::Dimension(_)))
    }

    pub fn has_power_error(&self) -> bool {
        self.violations.iter().any(|v| matches!(v, Violation::Power(_)))
    }

    pub fn has_spacing_error(&self) -> bool {
        self.violations.iter().any(|v| matches!(v, Violation::Spacing(_)))
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid large-scale realization: {0}")]
    Realization(String),
    #[error("closed-form analytics require d/lambda = 0.5, got {0}")]
    Spacing(f64),
    #[error("unsupported layout: {0} cells (only 1 or 7)")]
    UnsupportedLayout(usize),
    #[error("SINR grows without bound as M -> infinity (no contaminating cell for user {user})")]
    UnboundedLimit { user: usize },
    #[error("large-K limit requires one shared Ricean factor, found {0} and {1}")]
    MixedKFactor(f64, f64),
    #[error("at least 2 small-scale samples are required, got {0}")]
    InsufficientSamples(usize),
    #[error("invalid moment indices: {0}")]
    Index(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("sweep: {0}")]
    Sweep(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

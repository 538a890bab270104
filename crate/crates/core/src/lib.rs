//! Spectral efficiency of multi-cell massive MIMO uplinks over Ricean fading
//! with MRC and LS or MMSE channel estimates.
//!
//! The crate pairs closed-form effective SINR expressions with a Monte-Carlo
//! simulator of the same system so that each can check the other:
//!
//! - [`analytics`]: closed forms, the Rayleigh case and the large-`M` and
//!   large-`K` limits;
//! - [`montecarlo`]: seeded simulation of pilots, estimates and MRC outputs;
//! - [`moments`]: the second-order statistics both are built from;
//! - [`sweep`], [`scenario`], [`validation`]: the experiment runner's pieces.

pub mod analytics;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod geometry;
pub mod model;
pub mod moments;
pub mod montecarlo;
pub mod plot;
pub mod report;
pub mod scenario;
pub mod stream;
pub mod sweep;
pub mod validation;

pub use error::{ConfigError, Error, Result, Violation};
pub use estimation::EstimatorKind;
pub use exec::Executor;
pub use model::{
    validate_config, validate_config_for_simulation, LargeScaleRealization, SystemConfig, ValidatedConfig,
};
pub use scenario::Scenario;

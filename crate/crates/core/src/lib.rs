//! Lettuce greenhouse simulator and the plumbing around it.
//!
//! * [`dynamics`]: the continuous-time crop/climate model, its RK4
//!   discretization and the sensor map, plus analytic Jacobians used by
//!   gradient-based controllers.
//! * [`episode`]: closed-loop rollouts and the episode log exchanged between
//!   simulation, training and evaluation.
//! * [`weather`]: disturbance series, CSV ingestion, resampling, and the
//!   synthetic weather generator.
//! * [`metrics`]: economic performance index and constraint-violation
//!   statistics.

pub mod dynamics;
pub mod episode;
pub mod metrics;
pub mod params;
pub mod types;
pub mod weather;

pub use dynamics::{derivatives, measure, rk4_step};
pub use episode::{EpisodeLog, EpisodeMeta, Record};
pub use params::{ModelParams, SAMPLE_INTERVAL_S};
pub use types::{ControlInput, Disturbance, Output, State, StateRate};
pub use weather::{DisturbanceSeries, WeatherProfile};

/// Radiation below which it counts as night, W·m⁻².
pub const NIGHT_RADIATION: f64 = 10.0;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("non-finite derivative in RK4 stage {0}")]
    NonFiniteStage(&'static str),
    #[error("singular denominator in {0}")]
    Singular(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("policy returned out-of-bounds input at step {step}: {input:?}")]
    PolicyBounds { step: usize, input: ControlInput },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

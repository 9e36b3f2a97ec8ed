//! Receding-horizon control of the lettuce greenhouse.
//!
//! Each step solves a penalized finite-horizon problem by projected
//! gradient descent, over either the physical model or a trained recurrent
//! surrogate, applies the first input and moves on. Input box limits, the
//! night-time CO₂ ban and the rate limit hold exactly on every applied
//! input; output bands are soft.

pub mod closed_loop;
pub mod config;
pub mod predictor;
pub mod solver;

pub use closed_loop::{receding_horizon_control, Plant};
pub use config::{night_co2_mask, stage_cost, temp_bounds, MpcConfig, SolverConfig};
pub use predictor::{HorizonContext, OraclePredictor, Predictor, SurrogatePredictor};
pub use solver::{horizon_objective, solve_horizon, ControlPlan};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] greenhouse_core::Error),
    #[error(transparent)]
    Network(#[from] seqnet::Error),
    #[error("invalid controller configuration: {0}")]
    Config(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("step {step}: {source}")]
    Step { step: usize, source: Box<Error> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

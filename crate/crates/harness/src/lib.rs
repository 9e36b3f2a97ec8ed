//! Experiment driver for the greenhouse control lab: generate MPC training
//! trajectories, train recurrent surrogates over a grid, run the
//! controllers closed-loop on a held-out scenario and report.

use std::path::PathBuf;

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod svg;

pub use config::ExperimentConfig;
pub use manifest::RunManifest;
pub use svg::{emit_svg, Bound, Channel};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    MissingInput(String),
    #[error(transparent)]
    Model(#[from] greenhouse_core::Error),
    #[error(transparent)]
    Network(#[from] seqnet::Error),
    #[error("{label}: {source}")]
    Control { label: String, source: mpc::Error },
}

impl Error {
    /// Short machine-readable category printed on failure.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Data(_) => "data",
            Error::MissingInput(_) => "missing-input",
            Error::Model(_) => "model",
            Error::Network(_) => "training",
            Error::Control { .. } => "control",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

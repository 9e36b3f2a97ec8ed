//! Recurrent sequence regressors trained from scratch.
//!
//! Bidirectional two-layer LSTM or GRU stacks with a small dense head,
//! mapping a window of past `(d, u, y)` records to the next output. Gradients
//! are exact (backpropagation through time) for both the parameters and the
//! input window; the latter lets a controller differentiate through the
//! network.

pub mod cell;
pub mod checkpoint;
pub mod network;
pub mod optim;
pub mod scaler;
pub mod train;
pub mod window;

pub use cell::{gru_cell_forward, lstm_cell_forward, CellKind};
pub use network::{Dims, Mode, NetworkWeights, Tape};
pub use optim::{steplr, Adam};
pub use scaler::{record_features, Scaler, CHANNELS, FEATURES, TARGETS};
pub use train::{evaluate, mse_loss, train, TrainConfig, TrainOutcome};
pub use window::{make_windows, WindowSample, WindowSet};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{0}")]
    Empty(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("training diverged in epoch {epoch}, batch {batch} (loss {loss}); lower the learning rate or check the data")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! A small from-scratch LSTM regressor.
//!
//! One recurrent layer with forget/input/output gates, a tanh candidate and
//! a linear scalar read-out from the last hidden state. Training is plain
//! mini-batch gradient descent on mean squared error with BPTT gradients and
//! global-norm clipping.

mod checkpoint;
mod data;
mod gradcheck;
mod lstm;
mod train;

pub use checkpoint::{Forecaster, CHECKPOINT_VERSION};
pub use data::{make_multivariate_windows, make_windows, make_windows_with_scaler, MinMaxScaler, WindowDataset};
pub use gradcheck::{analytic_gradient, gradient_check, numeric_gradient, FD_STEP};
pub use lstm::{lstm_forward, Gate, LstmModel};
pub use train::{evaluate_mse, lstm_train, TrainConfig};

/// Window length used throughout the forecasting pipeline.
pub const DEFAULT_WINDOW: usize = 3;

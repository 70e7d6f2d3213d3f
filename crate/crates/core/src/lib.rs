//! Short-term traffic flow forecasting.
//!
//! The crate decomposes a flow series into intrinsic mode functions
//! (EMD / EEMD / CEEMDAN), regroups the modes by sample entropy, forecasts
//! each regrouped component with an LSTM whose hyperparameters are searched
//! by a grey wolf optimizer, corrects the low-frequency component with
//! neighbouring stations, and sums the component forecasts.
//!
//! Modules map one-to-one onto the stages:
//!
//! - [`decomposition`]: extrema, spline envelopes, EMD and the ensemble variants
//! - [`entropy`]: sample entropy and entropy-band regrouping
//! - [`neuralnet`]: windowing, LSTM forward/BPTT, training, gradient checking
//! - [`gwo`]: grey wolf optimizer and LSTM hyperparameter tuning
//! - [`spatiotemporal`]: dual-source low-frequency prediction with source switching
//! - [`pipeline`]: ingestion, cleaning, metrics, synthetic data and orchestration

pub mod decomposition;
pub mod entropy;
pub mod error;
pub mod gwo;
pub mod neuralnet;
pub mod pipeline;
pub mod rng;
pub mod spatiotemporal;
pub mod timeseries;

pub use error::{Error, Result};
pub use timeseries::TimeSeries;

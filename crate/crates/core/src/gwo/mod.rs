//! Grey wolf optimizer and its coupling to LSTM hyperparameter search.
//!
//! The pack is ranked by fitness (lower is better); the three best wolves
//! (alpha, beta, delta) pull every wolf towards them while the convergence
//! factor `a` falls linearly from 2 to 0, moving the search from exploration
//! to exploitation.

mod optimize;
mod pack;
mod tune;

pub use optimize::{gwo_optimize, gwo_optimize_from, Dim, GwoResult, IterationRecord, SearchSpace};
pub use pack::{gwo_step, step_with_draws, Draw, WolfPack, WORST_FITNESS};
pub use tune::{tune_lstm, HyperParams, TuneBudget, TunedLstm};

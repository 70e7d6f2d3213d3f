//! Low-frequency forecasting with neighbouring stations.
//!
//! Two forecasters run side by side over the test span: a univariate LSTM on
//! the target's low-frequency component and a multivariate LSTM that also
//! sees the neighbours' low-frequency components up to the previous step.
//! At each step the emitted value comes from whichever source had the smaller
//! absolute error on the step before; the univariate source wins ties and the
//! first step.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::entropy::ComponentSet;
use crate::error::{Error, Result};
use crate::neuralnet::{lstm_train, make_multivariate_windows, Forecaster, LstmModel, TrainConfig};
use crate::timeseries::TimeSeries;

pub use crate::entropy::extract_low_frequency;

/// A station's series and the ids of its adjacent stations.
#[derive(Debug, Clone, PartialEq)]
pub struct StationSeries {
    pub station_id: String,
    pub series: TimeSeries,
    pub neighbors: Vec<String>,
}

impl StationSeries {
    pub fn new(station_id: impl Into<String>, series: TimeSeries, neighbors: Vec<String>) -> Self {
        Self {
            station_id: station_id.into(),
            series,
            neighbors,
        }
    }
}

/// Which forecaster produced an emitted value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Univariate GWO-tuned LSTM.
    Temporal,
    /// Multivariate LSTM with neighbour features.
    Spatial,
}

/// One step of the dual-source walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualPrediction {
    /// Series index being forecast.
    pub t: usize,
    pub actual: f64,
    pub y_hat_1: f64,
    /// `None` when the station has no neighbours.
    pub y_hat_2: Option<f64>,
    pub chosen: Source,
    /// Scaled absolute errors of both sources at the previous step.
    pub err_prev: Option<(f64, f64)>,
}

impl DualPrediction {
    pub fn prediction(&self) -> f64 {
        match (self.chosen, self.y_hat_2) {
            (Source::Spatial, Some(y)) => y,
            _ => self.y_hat_1,
        }
    }
}

/// Source with the strictly smaller previous error; ties go to
/// [`Source::Temporal`].
pub fn select_source(err_prev_1: f64, err_prev_2: f64) -> Source {
    if err_prev_2 < err_prev_1 {
        Source::Spatial
    } else {
        Source::Temporal
    }
}

/// Check that every neighbour series shares the target's grid.
pub fn check_alignment(target: &StationSeries, neighbors: &[&StationSeries]) -> Result<()> {
    for n in neighbors {
        if !target.series.is_aligned_with(&n.series) {
            return Err(Error::Alignment(format!(
                "station {} is not aligned with {}",
                n.station_id, target.station_id
            )));
        }
    }
    Ok(())
}

/// Train the multivariate forecaster on `[target, neighbours...]` columns
/// (training span only).
pub fn pretrain_spatial(
    target: &[f64],
    neighbors: &[Vec<f64>],
    window: usize,
    hidden_dim: usize,
    config: &TrainConfig,
) -> Result<Forecaster> {
    let mut columns: Vec<&[f64]> = vec![target];
    columns.extend(neighbors.iter().map(Vec::as_slice));
    check_lengths(target.len(), neighbors)?;
    let data = make_multivariate_windows(&columns, window, 1)?;
    let init = LstmModel::init(columns.len(), hidden_dim, config.seed)?;
    let (model, _) = lstm_train(&init, &data, config)?;
    Forecaster::new(model, data.scaler().clone(), window, 1)
}

fn check_lengths(len: usize, neighbors: &[Vec<f64>]) -> Result<()> {
    for (j, n) in neighbors.iter().enumerate() {
        if n.len() != len {
            return Err(Error::Alignment(format!(
                "neighbour {j} has {} samples, target has {len}",
                n.len()
            )));
        }
    }
    Ok(())
}

/// Walk `span` one step at a time, emitting the switched prediction.
///
/// `target` and `neighbors` are full-length low-frequency series; inputs at
/// step `t` use observed values up to `t - 1`. With no neighbours or no
/// spatial model the walk reduces to the temporal forecaster alone.
pub fn predict_low_frequency(
    target: &[f64],
    neighbors: &[Vec<f64>],
    temporal: &Forecaster,
    spatial: Option<&Forecaster>,
    span: Range<usize>,
) -> Result<Vec<DualPrediction>> {
    check_lengths(target.len(), neighbors)?;
    if span.end > target.len() {
        return Err(Error::InvalidInput(format!(
            "span ends at {} but the series has {} samples",
            span.end,
            target.len()
        )));
    }
    let spatial = if neighbors.is_empty() { None } else { spatial };
    let mut columns: Vec<&[f64]> = vec![target];
    columns.extend(neighbors.iter().map(Vec::as_slice));
    if let Some(s) = spatial {
        if s.scaler.features() != columns.len() {
            return Err(Error::LengthMismatch {
                expected: s.scaler.features(),
                found: columns.len(),
            });
        }
    }
    let range = temporal.scaler.range(0);
    let mut trace = Vec::with_capacity(span.len());
    let mut prev: Option<(f64, f64)> = None;
    for t in span {
        let y1 = temporal.predict_at(&[target], t)?;
        let y2 = spatial.map(|s| s.predict_at(&columns, t)).transpose()?;
        let chosen = match (prev, y2) {
            (Some((e1, e2)), Some(_)) => select_source(e1, e2),
            _ => Source::Temporal,
        };
        let actual = target[t];
        trace.push(DualPrediction {
            t,
            actual,
            y_hat_1: y1,
            y_hat_2: y2,
            chosen,
            err_prev: prev,
        });
        let e1 = (actual - y1).abs() / range;
        let e2 = y2.map_or(f64::INFINITY, |y| (actual - y).abs() / range);
        prev = Some((e1, e2));
    }
    Ok(trace)
}

/// Emitted values of a trace.
pub fn trace_predictions(trace: &[DualPrediction]) -> Vec<f64> {
    trace.iter().map(DualPrediction::prediction).collect()
}

/// Low-frequency components of several stations' component sets.
pub fn low_frequency_of(sets: &[ComponentSet]) -> Vec<Vec<f64>> {
    sets.iter().map(extract_low_frequency).collect()
}

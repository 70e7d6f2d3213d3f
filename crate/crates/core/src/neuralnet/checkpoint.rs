use std::path::Path;

use serde::{Deserialize, Serialize};

use super::data::MinMaxScaler;
use super::lstm::LstmModel;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained model with the scaler and window geometry needed to forecast
/// in original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecaster {
    pub version: u32,
    pub model: LstmModel,
    pub scaler: MinMaxScaler,
    pub window: usize,
    pub horizon: usize,
}

impl Forecaster {
    pub fn new(model: LstmModel, scaler: MinMaxScaler, window: usize, horizon: usize) -> Result<Self> {
        if scaler.features() != model.input_dim() {
            return Err(Error::LengthMismatch {
                expected: model.input_dim(),
                found: scaler.features(),
            });
        }
        if window == 0 || horizon == 0 {
            return Err(Error::Config("window and horizon must be at least 1".into()));
        }
        Ok(Self {
            version: CHECKPOINT_VERSION,
            model,
            scaler,
            window,
            horizon,
        })
    }

    /// Forecast of `columns[0][t]` from the window ending at `t - horizon`,
    /// in original units.
    pub fn predict_at(&self, columns: &[&[f64]], t: usize) -> Result<f64> {
        if columns.len() != self.scaler.features() {
            return Err(Error::LengthMismatch {
                expected: self.scaler.features(),
                found: columns.len(),
            });
        }
        let span = self.window + self.horizon - 1;
        if t < span || columns.iter().any(|c| c.len() <= t - self.horizon) {
            return Err(Error::InvalidInput(format!(
                "index {t} has no complete input window"
            )));
        }
        let start = t - span;
        let mut seq = Vec::with_capacity(self.window * columns.len());
        for s in start..start + self.window {
            for (f, col) in columns.iter().enumerate() {
                seq.push(self.scaler.transform(f, col[s]));
            }
        }
        let y = self.model.predict_flat(&seq)?;
        Ok(self.scaler.inverse(0, y))
    }

    /// Forecasts for every `t` in `range`.
    pub fn predict_range(&self, columns: &[&[f64]], range: std::ops::Range<usize>) -> Result<Vec<f64>> {
        range.map(|t| self.predict_at(columns, t)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Forecaster = serde_json::from_str(text)?;
        if f.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                f.version
            )));
        }
        let m = LstmModel::from_params(f.model.input_dim(), f.model.hidden_dim(), f.model.params().to_vec())?;
        Forecaster::new(m, f.scaler, f.window, f.horizon)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

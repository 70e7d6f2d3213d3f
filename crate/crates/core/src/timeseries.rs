use chrono::{NaiveDate, NaiveDateTime, TimeDelta};

use crate::error::{Error, Result};

/// Fifteen minutes, the collection interval of the highway loop detectors.
pub const DEFAULT_STEP_MINUTES: i64 = 15;

pub fn default_step() -> TimeDelta {
    TimeDelta::minutes(DEFAULT_STEP_MINUTES)
}

/// Midnight 2000-01-01, used when a series has no meaningful wall-clock origin.
pub fn default_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2000, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid constant date")
}

/// Uniformly sampled scalar series.
///
/// Construction checks that there are at least two samples, that every value
/// is finite and that the step is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    start: NaiveDateTime,
    step: TimeDelta,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, start: NaiveDateTime, step: TimeDelta) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Degenerate(format!(
                "time series needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value {} at index {i}",
                values[i]
            )));
        }
        if step <= TimeDelta::zero() {
            return Err(Error::InvalidInput("time step must be positive".into()));
        }
        Ok(Self {
            values,
            start,
            step,
        })
    }

    /// Series starting at [`default_start`] with 15-minute spacing.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, default_start(), default_step())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn step(&self) -> TimeDelta {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, index: usize) -> NaiveDateTime {
        self.start + self.step * index as i32
    }

    /// Same grid, different values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                expected: self.values.len(),
                found: values.len(),
            });
        }
        Self::new(values, self.start, self.step)
    }

    /// True when both series share start, step and length.
    pub fn is_aligned_with(&self, other: &TimeSeries) -> bool {
        self.start == other.start && self.step == other.step && self.len() == other.len()
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub(crate) fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_and_non_finite() {
        assert!(matches!(
            TimeSeries::from_values(vec![1.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            TimeSeries::from_values(vec![1.0, f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn timestamps_follow_step() {
        let ts = TimeSeries::from_values(vec![0.0; 5]).unwrap();
        assert_eq!(ts.time_at(4) - ts.start(), TimeDelta::minutes(60));
    }
}

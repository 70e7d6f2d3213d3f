use serde::{Deserialize, Serialize};

use super::ingest::RawSeries;
use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanConfig {
    /// Outlier threshold in raw median absolute deviations (no 1.4826 factor).
    pub mad_k: f64,
    /// Largest tolerated fraction of missing slots.
    pub max_missing_fraction: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            mad_k: 6.0,
            max_missing_fraction: 0.5,
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median and raw median absolute deviation of the observed values.
pub fn median_mad(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    let med = median(&mut v);
    let mut dev: Vec<f64> = values.iter().map(|x| (x - med).abs()).collect();
    (med, median(&mut dev))
}

/// Fill gaps and replace outliers by linear interpolation.
///
/// Outliers are observed values with `|x - median| > k * MAD`. Interior gaps
/// are interpolated between the nearest observed neighbours; leading and
/// trailing gaps take the nearest observed value.
pub fn clean_series(raw: &RawSeries, config: &CleanConfig) -> Result<TimeSeries> {
    let total = raw.values.len();
    let missing = raw.missing();
    if total == 0 || missing as f64 > config.max_missing_fraction * total as f64 || total - missing < 2 {
        return Err(Error::UnusableSeries { missing, total });
    }
    let observed: Vec<f64> = raw.values.iter().flatten().copied().collect();
    let (med, mad) = median_mad(&observed);
    let limit = config.mad_k * mad;
    let kept: Vec<Option<f64>> = raw
        .values
        .iter()
        .map(|v| v.filter(|x| (x - med).abs() <= limit))
        .collect();
    let known: Vec<usize> = (0..total).filter(|&t| kept[t].is_some()).collect();
    if known.len() < 2 {
        return Err(Error::UnusableSeries { missing: total - known.len(), total });
    }
    let at = |t: usize| kept[t].expect("known index");
    let mut out = vec![0.0; total];
    for t in 0..=known[0] {
        out[t] = at(known[0]);
    }
    for w in known.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ya, yb) = (at(a), at(b));
        for t in a..=b {
            out[t] = ya + (yb - ya) * (t - a) as f64 / (b - a) as f64;
        }
    }
    let last = *known.last().expect("non-empty");
    for v in out.iter_mut().skip(last) {
        *v = at(last);
    }
    TimeSeries::new(out, raw.start, raw.step)
}

/// Chronological split; the training part has `round(n * ratio)` samples.
pub fn split_train_test(series: &[f64], ratio: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let at = split_index(series.len(), ratio)?;
    Ok((series[..at].to_vec(), series[at..].to_vec()))
}

pub fn split_index(n: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Config(format!("split ratio must be in (0, 1], got {ratio}")));
    }
    Ok(((n as f64 * ratio).round() as usize).min(n))
}

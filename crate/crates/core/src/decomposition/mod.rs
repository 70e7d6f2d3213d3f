//! Empirical mode decomposition and its noise-assisted ensemble variants.
//!
//! All three methods return an [`ImfSet`]: modes ordered from high to low
//! frequency plus a residue, such that the element-wise sum reproduces the
//! input up to rounding.

mod emd;
mod ensemble;
mod extrema;
mod spline;

pub use emd::{emd, extract_first_imf};
pub use ensemble::{ceemdan, eemd, eemd_detailed, EemdOutput};
pub use extrema::{find_extrema, Extrema};
pub use spline::CubicSpline;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{std_dev, TimeSeries};

/// Intrinsic mode functions plus residue, ordered high to low frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ImfSet {
    imfs: Vec<Vec<f64>>,
    residue: Vec<f64>,
}

impl ImfSet {
    pub fn new(imfs: Vec<Vec<f64>>, residue: Vec<f64>) -> Result<Self> {
        if let Some(bad) = imfs.iter().find(|imf| imf.len() != residue.len()) {
            return Err(Error::LengthMismatch {
                expected: residue.len(),
                found: bad.len(),
            });
        }
        Ok(Self { imfs, residue })
    }

    pub fn imfs(&self) -> &[Vec<f64>] {
        &self.imfs
    }

    pub fn residue(&self) -> &[f64] {
        &self.residue
    }

    pub fn imf_count(&self) -> usize {
        self.imfs.len()
    }

    /// Number of samples in each mode.
    pub fn len(&self) -> usize {
        self.residue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residue.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Vec<f64>>, Vec<f64>) {
        (self.imfs, self.residue)
    }
}

/// Element-wise sum of every IMF and the residue.
pub fn reconstruct(set: &ImfSet) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(Error::InvalidInput("cannot reconstruct an empty ImfSet".into()));
    }
    let mut out = vec![0.0; set.len()];
    for imf in set.imfs.iter().chain(std::iter::once(&set.residue)) {
        if imf.len() != out.len() {
            return Err(Error::LengthMismatch {
                expected: out.len(),
                found: imf.len(),
            });
        }
        for (o, v) in out.iter_mut().zip(imf) {
            *o += v;
        }
    }
    Ok(out)
}

/// How `noise_std` is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    /// Standard deviation in the units of the input signal.
    #[default]
    Absolute,
    /// Fraction of the input signal's standard deviation.
    RelativeToStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmdConfig {
    pub noise_std: f64,
    pub noise_scale: NoiseScale,
    pub realizations: usize,
    pub max_sift_iterations: usize,
    pub sift_stop_threshold: f64,
    pub master_seed: u64,
}

impl Default for EmdConfig {
    fn default() -> Self {
        Self {
            noise_std: 2000.0,
            noise_scale: NoiseScale::Absolute,
            realizations: 500,
            max_sift_iterations: 2000,
            sift_stop_threshold: 0.2,
            master_seed: 0,
        }
    }
}

impl EmdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        if self.max_sift_iterations == 0 {
            return Err(Error::Config("max_sift_iterations must be at least 1".into()));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::Config(format!(
                "noise_std must be finite and non-negative, got {}",
                self.noise_std
            )));
        }
        if !(self.sift_stop_threshold > 0.0) {
            return Err(Error::Config("sift_stop_threshold must be positive".into()));
        }
        Ok(())
    }

    /// Noise standard deviation in signal units for the given input.
    pub fn absolute_noise_std(&self, signal: &[f64]) -> f64 {
        match self.noise_scale {
            NoiseScale::Absolute => self.noise_std,
            NoiseScale::RelativeToStd => self.noise_std * std_dev(signal),
        }
    }

    pub(crate) fn sift_params(&self) -> SiftParams {
        SiftParams {
            max_iterations: self.max_sift_iterations,
            stop_threshold: self.sift_stop_threshold,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SiftParams {
    pub max_iterations: usize,
    pub stop_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Emd,
    Eemd,
    #[default]
    Ceemdan,
}

impl Method {
    pub fn decompose(self, series: &TimeSeries, config: &EmdConfig) -> Result<ImfSet> {
        match self {
            Method::Emd => emd(series, config),
            Method::Eemd => eemd(series, config),
            Method::Ceemdan => ceemdan(series, config),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Emd => "emd",
            Method::Eemd => "eemd",
            Method::Ceemdan => "ceemdan",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "emd" => Ok(Method::Emd),
            "eemd" => Ok(Method::Eemd),
            "ceemdan" => Ok(Method::Ceemdan),
            other => Err(Error::Config(format!("unknown decomposition method {other:?}"))),
        }
    }
}

/// Mean zero-crossing rate (crossings per sample) of a mode.
pub fn zero_crossing_rate(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let crossings = x
        .windows(2)
        .filter(|w| (w[0] < 0.0 && w[1] >= 0.0) || (w[0] >= 0.0 && w[1] < 0.0))
        .count();
    crossings as f64 / (x.len() - 1) as f64
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature min-max scaler onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(columns: &[&[f64]]) -> Result<Self> {
        let mut min = Vec::with_capacity(columns.len());
        let mut max = Vec::with_capacity(columns.len());
        for (feature, col) in columns.iter().enumerate() {
            if col.is_empty() {
                return Err(Error::InvalidInput(format!("feature {feature} is empty")));
            }
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidInput(format!("feature {feature} has non-finite values")));
            }
            if hi == lo {
                return Err(Error::DegenerateScaler { feature, value: lo });
            }
            min.push(lo);
            max.push(hi);
        }
        Ok(Self { min, max })
    }

    pub fn features(&self) -> usize {
        self.min.len()
    }

    pub fn range(&self, feature: usize) -> f64 {
        self.max[feature] - self.min[feature]
    }

    pub fn transform(&self, feature: usize, v: f64) -> f64 {
        (v - self.min[feature]) / self.range(feature)
    }

    pub fn inverse(&self, feature: usize, v: f64) -> f64 {
        v * self.range(feature) + self.min[feature]
    }
}

/// Sliding windows (stride 1) over one or more aligned columns. Column 0 is
/// the target. Inputs are stored flat as `samples x window x features`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDataset {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    window: usize,
    features: usize,
    horizon: usize,
    scaler: MinMaxScaler,
}

impl WindowDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn scaler(&self) -> &MinMaxScaler {
        &self.scaler
    }

    /// Scaled input of sample `i`, row-major `window x features`.
    pub fn input(&self, i: usize) -> &[f64] {
        let stride = self.window * self.features;
        &self.inputs[i * stride..(i + 1) * stride]
    }

    pub fn input_rows(&self, i: usize) -> Vec<Vec<f64>> {
        self.input(i).chunks(self.features).map(<[f64]>::to_vec).collect()
    }

    /// Scaled target of sample `i`.
    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Chronological split into the first `at` samples and the rest.
    pub fn split_at(&self, at: usize) -> (WindowDataset, WindowDataset) {
        let at = at.min(self.len());
        let stride = self.window * self.features;
        let head = WindowDataset {
            inputs: self.inputs[..at * stride].to_vec(),
            targets: self.targets[..at].to_vec(),
            ..self.clone_meta()
        };
        let tail = WindowDataset {
            inputs: self.inputs[at * stride..].to_vec(),
            targets: self.targets[at..].to_vec(),
            ..self.clone_meta()
        };
        (head, tail)
    }

    fn clone_meta(&self) -> WindowDataset {
        WindowDataset {
            inputs: Vec::new(),
            targets: Vec::new(),
            window: self.window,
            features: self.features,
            horizon: self.horizon,
            scaler: self.scaler.clone(),
        }
    }
}

/// Univariate windows; the scaler is fit on `series`, which should be the
/// training portion only.
pub fn make_windows(series: &[f64], window: usize, horizon: usize) -> Result<WindowDataset> {
    make_multivariate_windows(&[series], window, horizon)
}

/// Windows over aligned columns with a scaler fit on those columns.
pub fn make_multivariate_windows(
    columns: &[&[f64]],
    window: usize,
    horizon: usize,
) -> Result<WindowDataset> {
    check_shape(columns, window, horizon)?;
    let scaler = MinMaxScaler::fit(columns)?;
    make_windows_with_scaler(columns, window, horizon, &scaler)
}

/// Windows scaled with an existing scaler (e.g. test data with a training
/// scaler). Scaled values may leave `[0, 1]`.
pub fn make_windows_with_scaler(
    columns: &[&[f64]],
    window: usize,
    horizon: usize,
    scaler: &MinMaxScaler,
) -> Result<WindowDataset> {
    check_shape(columns, window, horizon)?;
    if scaler.features() != columns.len() {
        return Err(Error::LengthMismatch {
            expected: scaler.features(),
            found: columns.len(),
        });
    }
    let len = columns[0].len();
    let samples = len - window - horizon + 1;
    let features = columns.len();
    let mut inputs = Vec::with_capacity(samples * window * features);
    let mut targets = Vec::with_capacity(samples);
    for s in 0..samples {
        for t in s..s + window {
            for (f, col) in columns.iter().enumerate() {
                inputs.push(scaler.transform(f, col[t]));
            }
        }
        targets.push(scaler.transform(0, columns[0][s + window + horizon - 1]));
    }
    Ok(WindowDataset {
        inputs,
        targets,
        window,
        features,
        horizon,
        scaler: scaler.clone(),
    })
}

fn check_shape(columns: &[&[f64]], window: usize, horizon: usize) -> Result<()> {
    if columns.is_empty() {
        return Err(Error::InvalidInput("no input columns".into()));
    }
    if window == 0 || horizon == 0 {
        return Err(Error::InvalidInput("window and horizon must be at least 1".into()));
    }
    let len = columns[0].len();
    if let Some(c) = columns.iter().find(|c| c.len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            found: c.len(),
        });
    }
    if len < window + horizon {
        return Err(Error::EmptyDataset {
            len,
            window,
            horizon,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_windows() {
        let d = make_windows(&[1.0, 2.0, 3.0, 4.0, 5.0], 3, 1).unwrap();
        assert_eq!(d.len(), 2);
        let s = d.scaler();
        let raw = |i: usize| -> (Vec<f64>, f64) {
            (
                d.input(i).iter().map(|v| s.inverse(0, *v)).collect(),
                s.inverse(0, d.target(i)),
            )
        };
        assert_eq!(raw(0), (vec![1.0, 2.0, 3.0], 4.0));
        assert_eq!(raw(1), (vec![2.0, 3.0, 4.0], 5.0));
    }

    #[test]
    fn horizon_offsets_target() {
        let d = make_windows(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], 2, 3).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.scaler().inverse(0, d.target(0)), 4.0);
    }

    #[test]
    fn scaler_round_trip() {
        let x = [0.0, 5.0, 10.0];
        let s = MinMaxScaler::fit(&[&x]).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| s.transform(0, *v)).collect();
        assert_eq!(scaled, vec![0.0, 0.5, 1.0]);
        let back: Vec<f64> = scaled.iter().map(|v| s.inverse(0, *v)).collect();
        assert_eq!(back, x.to_vec());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            make_windows(&[1.0, 2.0, 3.0], 3, 1),
            Err(Error::EmptyDataset { .. })
        ));
        assert!(matches!(
            make_windows(&[2.0; 10], 3, 1),
            Err(Error::DegenerateScaler { .. })
        ));
    }

    #[test]
    fn training_windows_are_in_unit_interval() {
        let x: Vec<f64> = (0..50).map(|t| (t as f64 * 0.3).sin() * 40.0 + 7.0).collect();
        let d = make_windows(&x, 3, 1).unwrap();
        for i in 0..d.len() {
            assert!(d.input(i).iter().all(|v| (0.0..=1.0).contains(v)));
            assert!((0.0..=1.0).contains(&d.target(i)));
        }
    }

    #[test]
    fn multivariate_layout() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [10.0, 20.0, 30.0, 40.0];
        let d = make_multivariate_windows(&[&a, &b], 2, 1).unwrap();
        assert_eq!(d.features(), 2);
        assert_eq!(d.input(0).len(), 4);
        let rows = d.input_rows(1);
        assert_eq!(d.scaler().inverse(1, rows[1][1]), 30.0);
        assert_eq!(d.scaler().inverse(0, d.target(1)), 4.0);
    }

    #[test]
    fn split_is_chronological() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let d = make_windows(&x, 3, 1).unwrap();
        let (a, b) = d.split_at(10);
        assert_eq!(a.len() + b.len(), d.len());
        assert_eq!(b.target(0), d.target(10));
        assert_eq!(b.input(0), d.input(10));
    }
}

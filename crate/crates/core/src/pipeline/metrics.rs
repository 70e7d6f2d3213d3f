use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Error metrics of one forecast against the actual series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub sse: f64,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    /// Mean of `|e| / |y|` over targets with `y != 0`; `None` when every
    /// target is zero.
    pub mape: Option<f64>,
    pub mape_excluded: usize,
    pub r2: f64,
}

/// Standard error metrics. When the actual series is constant, `r2` is 1
/// for a perfect prediction and 0 otherwise.
pub fn compute_metrics(actual: &[f64], predicted: &[f64]) -> Result<MetricsReport> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: actual.len(),
            found: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InvalidInput("metrics need at least one sample".into()));
    }
    let n = actual.len();
    let nf = n as f64;
    let mut sse = 0.0;
    let mut sae = 0.0;
    let mut ape = 0.0;
    let mut excluded = 0;
    for (&y, &p) in actual.iter().zip(predicted) {
        let e = p - y;
        sse += e * e;
        sae += e.abs();
        if y == 0.0 {
            excluded += 1;
        } else {
            ape += (e / y).abs();
        }
    }
    let mean = actual.iter().sum::<f64>() / nf;
    let ss_tot: f64 = actual.iter().map(|y| (y - mean) * (y - mean)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - sse / ss_tot
    } else if sse == 0.0 {
        1.0
    } else {
        0.0
    };
    let mse = sse / nf;
    Ok(MetricsReport {
        n,
        sse,
        mae: sae / nf,
        mse,
        rmse: mse.sqrt(),
        mape: (excluded < n).then(|| ape / (n - excluded) as f64),
        mape_excluded: excluded,
        r2,
    })
}

/// Element-wise sum of component forecasts.
pub fn aggregate_components(components: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = components
        .first()
        .ok_or_else(|| Error::InvalidInput("no components to aggregate".into()))?;
    let mut out = first.clone();
    for c in &components[1..] {
        if c.len() != out.len() {
            return Err(Error::LengthMismatch {
                expected: out.len(),
                found: c.len(),
            });
        }
        for (o, v) in out.iter_mut().zip(c) {
            *o += v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_example() {
        let m = compute_metrics(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!((m.sse - 2.0).abs() < 1e-12);
        assert!((m.mse - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.rmse - 0.816_496_580_927_726).abs() < 1e-12);
        assert!((m.mae - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.mape.unwrap() - 4.0 / 9.0).abs() < 1e-12);
        assert!(m.r2.abs() < 1e-12);
    }

    #[test]
    fn perfect_fit() {
        let y = [3.0, -1.0, 7.5, 2.0];
        let m = compute_metrics(&y, &y).unwrap();
        assert_eq!((m.sse, m.mae, m.mse, m.rmse, m.mape, m.r2), (0.0, 0.0, 0.0, 0.0, Some(0.0), 1.0));
    }

    #[test]
    fn zero_targets_are_excluded() {
        let m = compute_metrics(&[0.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(m.mape_excluded, 1);
        assert!((m.mape.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(compute_metrics(&[0.0, 0.0], &[1.0, 1.0]).unwrap().mape, None);
    }

    #[test]
    fn length_mismatch() {
        assert!(compute_metrics(&[1.0], &[1.0, 2.0]).is_err());
        assert!(aggregate_components(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn aggregate_identity() {
        assert_eq!(aggregate_components(&[vec![1.0, 2.0]]).unwrap(), vec![1.0, 2.0]);
    }

    proptest! {
        #[test]
        fn constant_shift_closed_form(y in prop::collection::vec(-100.0f64..100.0, 2..50), c in -5.0f64..5.0) {
            let p: Vec<f64> = y.iter().map(|v| v + c).collect();
            let m = compute_metrics(&y, &p).unwrap();
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
            prop_assume!(ss_tot > 1e-6);
            prop_assert!((m.mae - c.abs()).abs() < 1e-9);
            let r2 = 1.0 - y.len() as f64 * c * c / ss_tot;
            prop_assert!((m.r2 - r2).abs() < 1e-9 * r2.abs().max(1.0));
        }

        #[test]
        fn identities_hold(y in prop::collection::vec(-100.0f64..100.0, 1..50), seed in 0u64..1000) {
            let p: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + ((i as u64 * 31 + seed) % 7) as f64 - 3.0).collect();
            let m = compute_metrics(&y, &p).unwrap();
            prop_assert!((m.sse - m.n as f64 * m.mse).abs() <= 1e-12 * m.sse.max(1.0));
            prop_assert!((m.rmse - m.mse.sqrt()).abs() <= 1e-12);
            prop_assert!(m.r2 <= 1.0);
        }

        #[test]
        fn aggregate_matches_naive_sum(rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 5), 1..6)) {
            let got = aggregate_components(&rows).unwrap();
            for t in 0..5 {
                let mut s = 0.0;
                for r in &rows {
                    s += r[t];
                }
                prop_assert_eq!(got[t], s);
            }
        }
    }
}

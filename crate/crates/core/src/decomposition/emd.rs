use super::extrema::scan;
use super::spline::envelope_into;
use super::{EmdConfig, ImfSet, SiftParams};
use crate::error::Result;
use crate::timeseries::TimeSeries;

/// Hard ceiling on the number of modes; real signals stop far earlier
/// because every extraction removes extrema from the residue.
const MAX_IMFS: usize = 64;

/// Plain EMD of `series`.
///
/// A series without at least two maxima and two minima is returned as pure
/// residue.
pub fn emd(series: &TimeSeries, config: &EmdConfig) -> Result<ImfSet> {
    config.validate()?;
    Ok(decompose(series.values(), config.sift_params()))
}

/// The first IMF of `signal`, or `None` when it cannot be sifted.
pub fn extract_first_imf(signal: &[f64], config: &EmdConfig) -> Option<Vec<f64>> {
    first_imf(signal, config.sift_params())
}

pub(crate) fn decompose(x: &[f64], params: SiftParams) -> ImfSet {
    let mut residue = x.to_vec();
    let mut imfs = Vec::new();
    while imfs.len() < MAX_IMFS {
        let Some(imf) = first_imf(&residue, params) else {
            break;
        };
        for (r, v) in residue.iter_mut().zip(&imf) {
            *r -= v;
        }
        imfs.push(imf);
    }
    ImfSet::new(imfs, residue).expect("modes share the input length")
}

pub(crate) fn first_imf(signal: &[f64], params: SiftParams) -> Option<Vec<f64>> {
    if !scan(signal).supports_envelopes() {
        return None;
    }
    Some(sift(signal, params))
}

/// Repeatedly subtract the mean of the spline envelopes until the relative
/// change between iterates drops below the threshold.
fn sift(signal: &[f64], params: SiftParams) -> Vec<f64> {
    let n = signal.len();
    let mut h = signal.to_vec();
    let mut upper = vec![0.0; n];
    let mut lower = vec![0.0; n];
    for _ in 0..params.max_iterations {
        let ext = scan(&h);
        if !ext.supports_envelopes() {
            break;
        }
        envelope_into(&h, &ext.maxima, &mut upper);
        envelope_into(&h, &ext.minima, &mut lower);
        let mut change = 0.0;
        let mut energy = 0.0;
        for i in 0..n {
            let mean = 0.5 * (upper[i] + lower[i]);
            change += mean * mean;
            energy += h[i] * h[i];
            h[i] -= mean;
        }
        if energy == 0.0 || change / energy < params.stop_threshold {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{reconstruct, zero_crossing_rate};
    use std::f64::consts::PI;

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut sab = 0.0;
        let mut saa = 0.0;
        let mut sbb = 0.0;
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        sab / (saa * sbb).sqrt()
    }

    fn series(v: Vec<f64>) -> TimeSeries {
        TimeSeries::from_values(v).unwrap()
    }

    #[test]
    fn single_tone_is_one_dominant_imf() {
        let x: Vec<f64> = (0..512).map(|t| (2.0 * PI * t as f64 / 64.0).sin()).collect();
        let set = emd(&series(x.clone()), &EmdConfig::default()).unwrap();
        assert!(set.imf_count() >= 1);
        assert!(corr(&set.imfs()[0], &x) > 0.99);
        let res_max = set.residue().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(res_max < 0.1, "residue max {res_max}");
    }

    #[test]
    fn two_tones_separate() {
        let n = 1024;
        let fast: Vec<f64> = (0..n).map(|t| (2.0 * PI * 8.0 * t as f64 / n as f64).sin()).collect();
        let slow: Vec<f64> = (0..n).map(|t| (2.0 * PI * t as f64 / n as f64).sin()).collect();
        let x: Vec<f64> = fast.iter().zip(&slow).map(|(a, b)| a + b).collect();
        let set = emd(&series(x), &EmdConfig::default()).unwrap();
        assert!(corr(&set.imfs()[0], &fast) > 0.95);
        // one cycle over the record leaves a single maximum and minimum, which
        // the extraction rule treats as trend: the slow tone is what remains
        // after the first mode
        let mut rest = set.residue().to_vec();
        for imf in &set.imfs()[1..] {
            for (r, v) in rest.iter_mut().zip(imf) {
                *r += v;
            }
        }
        let c = corr(&rest, &slow);
        assert!(c > 0.95, "slow-tone correlation {c}");
    }

    #[test]
    fn tones_with_several_cycles_land_in_separate_imfs() {
        let n = 1024;
        let fast: Vec<f64> = (0..n).map(|t| (2.0 * PI * 32.0 * t as f64 / n as f64).sin()).collect();
        let slow: Vec<f64> = (0..n).map(|t| (2.0 * PI * 4.0 * t as f64 / n as f64).sin()).collect();
        let x: Vec<f64> = fast.iter().zip(&slow).map(|(a, b)| a + b).collect();
        let set = emd(&series(x), &EmdConfig::default()).unwrap();
        assert!(corr(&set.imfs()[0], &fast) > 0.95);
        assert!(corr(&set.imfs()[1], &slow) > 0.95);
    }

    #[test]
    fn completeness_and_ordering() {
        let x: Vec<f64> = (0..800)
            .map(|t| {
                let t = t as f64;
                (t * 0.9).sin() + 0.5 * (t * 0.13).sin() + 0.01 * t + 0.3 * (t * 0.031).cos()
            })
            .collect();
        let set = emd(&series(x.clone()), &EmdConfig::default()).unwrap();
        let back = reconstruct(&set).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-10);
        }
        let rates: Vec<f64> = set.imfs().iter().map(|m| zero_crossing_rate(m)).collect();
        for w in rates.windows(2) {
            assert!(w[0] >= w[1], "zero-crossing rates {rates:?}");
        }
    }

    #[test]
    fn monotone_input_is_pure_residue() {
        let x: Vec<f64> = (0..50).map(|t| (t as f64).powi(2)).collect();
        let set = emd(&series(x.clone()), &EmdConfig::default()).unwrap();
        assert_eq!(set.imf_count(), 0);
        assert_eq!(set.residue(), &x[..]);
    }

    #[test]
    fn two_samples_are_pure_residue() {
        let set = emd(&series(vec![1.0, 2.0]), &EmdConfig::default()).unwrap();
        assert_eq!(set.imf_count(), 0);
    }
}

//! Noise-assisted ensemble decompositions.
//!
//! Realization `i` draws its white noise from ChaCha stream `i` of the
//! master seed, and ensemble sums are accumulated in realization order, so
//! output is bit-identical no matter how rayon schedules the work.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::emd::{decompose, first_imf};
use super::extrema::scan;
use super::{EmdConfig, ImfSet, SiftParams};
use crate::error::Result;
use crate::rng::stream_rng;
use crate::timeseries::TimeSeries;

const MAX_STAGES: usize = 64;

#[derive(Debug, Clone)]
pub struct EemdOutput {
    pub imfs: ImfSet,
    /// Ensemble mean of the injected noise that survives averaging:
    /// `sum(mean IMFs) + mean residue - input`.
    pub noise_residual: Vec<f64>,
}

fn unit_noise(seed: u64, realization: usize, n: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, realization as u64);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Ensemble EMD: average the modes of `realizations` noisy copies.
///
/// Realizations that yield fewer modes are padded with zero modes. The
/// residue is `input - sum(mean IMFs)`, which keeps the decomposition
/// complete; the averaged-away noise is reported by [`eemd_detailed`].
pub fn eemd(series: &TimeSeries, config: &EmdConfig) -> Result<ImfSet> {
    Ok(eemd_detailed(series, config)?.imfs)
}

pub fn eemd_detailed(series: &TimeSeries, config: &EmdConfig) -> Result<EemdOutput> {
    config.validate()?;
    let x = series.values();
    let n = x.len();
    let sigma = config.absolute_noise_std(x);
    let params = config.sift_params();
    if sigma == 0.0 {
        // every realization is the clean signal
        return Ok(EemdOutput {
            imfs: decompose(x, params),
            noise_residual: vec![0.0; n],
        });
    }

    let runs: Vec<ImfSet> = (0..config.realizations)
        .into_par_iter()
        .map(|i| {
            let noisy: Vec<f64> = unit_noise(config.master_seed, i, n)
                .into_iter()
                .zip(x)
                .map(|(w, v)| v + sigma * w)
                .collect();
            decompose(&noisy, params)
        })
        .collect();

    let count = runs.iter().map(ImfSet::imf_count).max().unwrap_or(0);
    let scale = 1.0 / config.realizations as f64;
    let mut mean_imfs = vec![vec![0.0; n]; count];
    let mut mean_residue = vec![0.0; n];
    for run in &runs {
        for (acc, imf) in mean_imfs.iter_mut().zip(run.imfs()) {
            add_into(acc, imf);
        }
        add_into(&mut mean_residue, run.residue());
    }
    for m in mean_imfs.iter_mut().chain(std::iter::once(&mut mean_residue)) {
        m.iter_mut().for_each(|v| *v *= scale);
    }

    let residue = subtract_all(x, &mean_imfs);
    let noise_residual = (0..n)
        .map(|t| mean_imfs.iter().map(|m| m[t]).sum::<f64>() + mean_residue[t] - x[t])
        .collect();
    Ok(EemdOutput {
        imfs: ImfSet::new(mean_imfs, residue)?,
        noise_residual,
    })
}

/// Complete ensemble EMD with adaptive noise.
///
/// Stage 0 perturbs the input with `sigma * w_i`; stage `k` perturbs the
/// running residue with `sigma * E_k(w_i)`, the k-th EMD mode of the same
/// noise realization. Each stage's mode is the ensemble mean of the first
/// EMD modes of the perturbed copies with the ensemble mean of the injected
/// perturbation removed, which is the running residue minus the ensemble
/// mean of the perturbed copies' local means. Extraction stops once the
/// residue lacks two maxima and two minima.
pub fn ceemdan(series: &TimeSeries, config: &EmdConfig) -> Result<ImfSet> {
    config.validate()?;
    let x = series.values();
    let n = x.len();
    let sigma = config.absolute_noise_std(x);
    let params = config.sift_params();
    if sigma == 0.0 {
        return Ok(decompose(x, params));
    }

    let noise: Vec<Vec<f64>> = (0..config.realizations)
        .into_par_iter()
        .map(|i| unit_noise(config.master_seed, i, n))
        .collect();
    let noise_modes: Vec<Vec<Vec<f64>>> = noise
        .par_iter()
        .map(|w| decompose(w, params).into_parts().0)
        .collect();

    let mut imfs = Vec::new();
    let mut residue = x.to_vec();
    for stage in 0..MAX_STAGES {
        if !scan(&residue).supports_envelopes() {
            break;
        }
        let perturbation = |i: usize| -> Option<&[f64]> {
            if stage == 0 {
                Some(&noise[i])
            } else {
                noise_modes[i].get(stage).map(Vec::as_slice)
            }
        };
        let local_mean =
            ensemble_local_mean(&residue, sigma, params, config.realizations, perturbation);
        let imf: Vec<f64> = residue.iter().zip(&local_mean).map(|(r, m)| r - m).collect();
        if imf.iter().all(|v| *v == 0.0) {
            break;
        }
        residue = local_mean;
        imfs.push(imf);
    }
    // re-derive the residue by subtraction so the sum telescopes exactly
    let residue = subtract_all(x, &imfs);
    ImfSet::new(imfs, residue)
}

/// Ensemble mean over realizations of the local mean `y - E_1(y)` of each
/// perturbed copy `y = base + sigma * p_i`. A copy that cannot be sifted is
/// its own local mean.
fn ensemble_local_mean<'a, F>(
    base: &[f64],
    sigma: f64,
    params: SiftParams,
    realizations: usize,
    perturbation: F,
) -> Vec<f64>
where
    F: Fn(usize) -> Option<&'a [f64]> + Sync,
{
    let means: Vec<Vec<f64>> = (0..realizations)
        .into_par_iter()
        .map(|i| {
            let mut y: Vec<f64> = match perturbation(i) {
                Some(p) => base.iter().zip(p).map(|(b, w)| b + sigma * w).collect(),
                None => base.to_vec(),
            };
            if let Some(imf) = first_imf(&y, params) {
                for (v, m) in y.iter_mut().zip(&imf) {
                    *v -= m;
                }
            }
            y
        })
        .collect();
    let mut mean = vec![0.0; base.len()];
    for m in &means {
        add_into(&mut mean, m);
    }
    let scale = 1.0 / realizations as f64;
    mean.iter_mut().for_each(|v| *v *= scale);
    mean
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

fn subtract_all(x: &[f64], modes: &[Vec<f64>]) -> Vec<f64> {
    let mut r = x.to_vec();
    for m in modes {
        for (a, b) in r.iter_mut().zip(m) {
            *a -= b;
        }
    }
    r
}

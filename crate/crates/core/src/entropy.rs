//! Sample entropy and entropy-band regrouping of IMFs.
//!
//! Sample entropy is `-ln(A / B)`, where `B` counts ordered template pairs
//! of length `m` within Chebyshev distance `r` and `A` the pairs that still
//! match at length `m + 1`. Both counts run over the first `N - m` templates
//! and exclude self-matches. The per-template normalisations of the
//! textbook definition cancel in the ratio, so the counts are used directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::ImfSet;
use crate::error::{Error, Result};
use crate::timeseries::std_dev;

/// Band edges that split entropies into four groups: `[1, inf)`, `[0.5, 1)`,
/// `[0.1, 0.5)` and `[0, 0.1)`.
pub const DEFAULT_BAND_EDGES: [f64; 5] = [f64::INFINITY, 1.0, 0.5, 0.1, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    /// Radius in the units of the series.
    Absolute(f64),
    /// Radius as a fraction of the series' standard deviation.
    StdFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampEnParams {
    pub m: usize,
    pub r: Tolerance,
}

impl Default for SampEnParams {
    fn default() -> Self {
        Self {
            m: 2,
            r: Tolerance::StdFraction(0.2),
        }
    }
}

impl SampEnParams {
    pub fn absolute(m: usize, r: f64) -> Self {
        Self {
            m,
            r: Tolerance::Absolute(r),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("sample entropy needs m >= 1".into()));
        }
        let r = match self.r {
            Tolerance::Absolute(r) | Tolerance::StdFraction(r) => r,
        };
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Config(format!("sample entropy tolerance must be positive, got {r}")));
        }
        Ok(())
    }

    /// Absolute radius for `series`.
    pub fn radius(&self, series: &[f64]) -> f64 {
        match self.r {
            Tolerance::Absolute(r) => r,
            Tolerance::StdFraction(f) => f * std_dev(series),
        }
    }
}

/// Unordered template-pair match counts at lengths `m` and `m + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchCounts {
    pub length_m: u64,
    pub length_m1: u64,
}

pub fn match_counts(series: &[f64], m: usize, r: f64) -> MatchCounts {
    let n = series.len();
    let mut counts = MatchCounts {
        length_m: 0,
        length_m1: 0,
    };
    if n <= m {
        return counts;
    }
    let templates = n - m;
    for i in 0..templates {
        for j in i + 1..templates {
            if (0..m).all(|k| (series[i + k] - series[j + k]).abs() <= r) {
                counts.length_m += 1;
                if (series[i + m] - series[j + m]).abs() <= r {
                    counts.length_m1 += 1;
                }
            }
        }
    }
    counts
}

/// Sample entropy of `series`; errors if either match count is zero.
pub fn sample_entropy(series: &[f64], params: &SampEnParams) -> Result<f64> {
    params.validate()?;
    if series.len() <= params.m + 1 {
        return Err(Error::Degenerate(format!(
            "sample entropy with m = {} needs more than {} samples, got {}",
            params.m,
            params.m + 1,
            series.len()
        )));
    }
    if let Some(v) = series.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite sample {v}")));
    }
    let c = match_counts(series, params.m, params.radius(series));
    if c.length_m == 0 || c.length_m1 == 0 {
        return Err(Error::UndefinedEntropy {
            matches_m: c.length_m,
            matches_m1: c.length_m1,
        });
    }
    Ok(-(c.length_m1 as f64 / c.length_m as f64).ln())
}

/// IMFs regrouped into components by entropy band.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSet {
    components: Vec<Vec<f64>>,
    members: Vec<Vec<usize>>,
    bands: Vec<usize>,
    entropies: Vec<Option<f64>>,
    residue: Vec<f64>,
}

impl ComponentSet {
    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// IMF indices (0-based) that make up each component.
    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    /// Entropy band of each component.
    pub fn bands(&self) -> &[usize] {
        &self.bands
    }

    /// Sample entropy of each original IMF; `None` where undefined.
    pub fn entropies(&self) -> &[Option<f64>] {
        &self.entropies
    }

    pub fn residue(&self) -> &[f64] {
        &self.residue
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Component index for each IMF.
    pub fn component_of_imf(&self) -> Vec<usize> {
        let mut out = vec![0; self.entropies.len()];
        for (c, members) in self.members.iter().enumerate() {
            for &i in members {
                out[i] = c;
            }
        }
        out
    }

    /// Mean member entropy, undefined entropies counted as 0.
    pub fn mean_entropy(&self, component: usize) -> f64 {
        let m = &self.members[component];
        m.iter().map(|&i| self.entropies[i].unwrap_or(0.0)).sum::<f64>() / m.len() as f64
    }

    /// The lowest-entropy component: deepest band, then smallest mean
    /// entropy, then the later (lower-frequency) component.
    pub fn low_frequency_index(&self) -> Option<usize> {
        (0..self.len()).max_by(|&a, &b| {
            self.bands[a].cmp(&self.bands[b]).then(
                self.mean_entropy(b)
                    .partial_cmp(&self.mean_entropy(a))
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
        })
    }

    /// Components as forecast targets: the residue is folded into the
    /// low-frequency component. With no IMFs the residue is the only target.
    pub fn forecast_targets(&self) -> Vec<Vec<f64>> {
        let Some(low) = self.low_frequency_index() else {
            return vec![self.residue.clone()];
        };
        let mut out = self.components.clone();
        for (v, r) in out[low].iter_mut().zip(&self.residue) {
            *v += r;
        }
        out
    }

    /// Index of the low-frequency target within [`Self::forecast_targets`].
    pub fn low_frequency_target(&self) -> usize {
        self.low_frequency_index().unwrap_or(0)
    }
}

/// The lowest-entropy component with the residue folded in.
pub fn extract_low_frequency(components: &ComponentSet) -> Vec<f64> {
    components
        .forecast_targets()
        .swap_remove(components.low_frequency_target())
}

pub fn validate_band_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::Config("need at least two band edges".into()));
    }
    if edges.iter().any(|e| e.is_nan()) || edges.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Config(format!(
            "band edges must be strictly decreasing, got {edges:?}"
        )));
    }
    Ok(())
}

/// Band `b` holds entropies with `edges[b] > se >= edges[b + 1]`; values
/// outside the edges clamp to the first or last band, and an undefined
/// entropy goes to the last band.
pub fn assign_band(se: Option<f64>, edges: &[f64]) -> usize {
    let last = edges.len() - 2;
    match se {
        None => last,
        Some(v) => (0..=last)
            .find(|&b| v >= edges[b + 1])
            .unwrap_or(last),
    }
}

/// Sum consecutive IMFs that share an entropy band.
pub fn recombine_by_entropy(
    imfs: &ImfSet,
    params: &SampEnParams,
    band_edges: &[f64],
) -> Result<ComponentSet> {
    params.validate()?;
    validate_band_edges(band_edges)?;
    let entropies = imfs
        .imfs()
        .par_iter()
        .map(|imf| match sample_entropy(imf, params) {
            Ok(v) => Ok(Some(v)),
            Err(Error::UndefinedEntropy { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    group_by_bands(imfs, entropies, band_edges)
}

/// Group with precomputed entropies.
pub fn group_by_bands(
    imfs: &ImfSet,
    entropies: Vec<Option<f64>>,
    band_edges: &[f64],
) -> Result<ComponentSet> {
    validate_band_edges(band_edges)?;
    if entropies.len() != imfs.imf_count() {
        return Err(Error::LengthMismatch {
            expected: imfs.imf_count(),
            found: entropies.len(),
        });
    }
    let mut components: Vec<Vec<f64>> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut bands: Vec<usize> = Vec::new();
    for (i, (imf, se)) in imfs.imfs().iter().zip(&entropies).enumerate() {
        let band = assign_band(*se, band_edges);
        if bands.last() == Some(&band) {
            let acc = components.last_mut().expect("non-empty with a band");
            for (a, v) in acc.iter_mut().zip(imf) {
                *a += v;
            }
            members.last_mut().expect("non-empty").push(i);
        } else {
            components.push(imf.clone());
            members.push(vec![i]);
            bands.push(band);
        }
    }
    Ok(ComponentSet {
        components,
        members,
        bands,
        entropies,
        residue: imfs.residue().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Literal template construction with per-template normalisation.
    fn oracle(x: &[f64], m: usize, r: f64) -> (u64, u64, f64) {
        let n = x.len();
        let templates = |len: usize| -> Vec<Vec<f64>> {
            (0..n - m).map(|i| x[i..i + len].to_vec()).collect()
        };
        let tm = templates(m);
        let tm1 = templates(m + 1);
        let cheb = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let mut b_total = 0u64;
        let mut a_total = 0u64;
        let mut b_avg = 0.0;
        let mut a_avg = 0.0;
        for i in 0..n - m {
            let bi = (0..n - m).filter(|&j| j != i && cheb(&tm[i], &tm[j]) <= r).count();
            let ai = (0..n - m).filter(|&j| j != i && cheb(&tm1[i], &tm1[j]) <= r).count();
            b_total += bi as u64;
            a_total += ai as u64;
            b_avg += bi as f64 / (n - m - 1) as f64;
            a_avg += ai as f64 / (n - m - 1) as f64;
        }
        b_avg /= (n - m) as f64;
        a_avg /= (n - m) as f64;
        (b_total, a_total, -(a_avg / b_avg).ln())
    }

    #[test]
    fn constant_series_is_zero() {
        let x = vec![5.0; 30];
        assert_eq!(sample_entropy(&x, &SampEnParams::absolute(2, 0.2)).unwrap(), 0.0);
    }

    #[test]
    fn alternating_series_matches_oracle() {
        let x: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect();
        let se = sample_entropy(&x, &SampEnParams::absolute(2, 0.1)).unwrap();
        let (b, a, expected) = oracle(&x, 2, 0.1);
        let c = match_counts(&x, 2, 0.1);
        assert_eq!((2 * c.length_m, 2 * c.length_m1), (b, a));
        assert!((se - expected).abs() < 1e-12);
        // perfectly periodic: every length-m match extends
        assert_eq!(se, 0.0);
    }

    #[test]
    fn noise_is_more_complex_than_sine() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 300;
        let noise: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let sd = std_dev(&noise);
        let sine: Vec<f64> = (0..n)
            .map(|t| sd * 2f64.sqrt() * (t as f64 * 0.2).sin())
            .collect();
        let p = SampEnParams::default();
        assert!(sample_entropy(&noise, &p).unwrap() > sample_entropy(&sine, &p).unwrap());
    }

    #[test]
    fn no_matches_is_undefined() {
        let x: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        assert!(matches!(
            sample_entropy(&x, &SampEnParams::absolute(2, 0.5)),
            Err(Error::UndefinedEntropy { .. })
        ));
    }

    #[test]
    fn too_short_is_rejected() {
        assert!(matches!(
            sample_entropy(&[1.0, 2.0, 3.0], &SampEnParams::absolute(2, 0.5)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn published_entropy_table_groups_into_four_components() {
        let se = [
            1.142, 1.003, 1.088, 0.555, 0.528, 0.389, 0.228, 0.068, 0.041, 0.026, 0.011, 0.002,
        ];
        let imfs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, 1.0]).collect();
        let set = ImfSet::new(imfs, vec![0.0, 0.0]).unwrap();
        let c = group_by_bands(&set, se.iter().map(|v| Some(*v)).collect(), &DEFAULT_BAND_EDGES)
            .unwrap();
        assert_eq!(
            c.members(),
            &[vec![0, 1, 2], vec![3, 4], vec![5, 6], vec![7, 8, 9, 10, 11]]
        );
        assert_eq!(c.low_frequency_index(), Some(3));
        assert_eq!(c.components()[0], vec![3.0, 3.0]);
    }

    #[test]
    fn single_imf_is_single_component() {
        let imf: Vec<f64> = (0..40).map(|t| (t as f64 * 0.9).sin()).collect();
        let set = ImfSet::new(vec![imf.clone()], vec![0.0; 40]).unwrap();
        let c = recombine_by_entropy(&set, &SampEnParams::default(), &DEFAULT_BAND_EDGES).unwrap();
        assert_eq!(c.components(), &[imf]);
        assert_eq!(extract_low_frequency(&c), c.components()[0]);
    }

    #[test]
    fn undefined_entropy_joins_lowest_band() {
        assert_eq!(assign_band(None, &DEFAULT_BAND_EDGES), 3);
        assert_eq!(assign_band(Some(5.0), &DEFAULT_BAND_EDGES), 0);
        assert_eq!(assign_band(Some(1.0), &DEFAULT_BAND_EDGES), 0);
        assert_eq!(assign_band(Some(0.0999), &DEFAULT_BAND_EDGES), 3);
        assert_eq!(assign_band(Some(-1.0), &DEFAULT_BAND_EDGES), 3);
    }

    #[test]
    fn band_edges_validated() {
        assert!(validate_band_edges(&[1.0, 1.0]).is_err());
        assert!(validate_band_edges(&[0.0, 1.0]).is_err());
        assert!(validate_band_edges(&[1.0]).is_err());
    }

    #[test]
    fn residue_folds_into_low_frequency_target() {
        let imfs = vec![vec![1.0, -1.0, 1.0], vec![0.5, 0.5, -0.5]];
        let set = ImfSet::new(imfs, vec![10.0, 10.0, 10.0]).unwrap();
        let c = group_by_bands(&set, vec![Some(1.5), Some(0.05)], &DEFAULT_BAND_EDGES).unwrap();
        let targets = c.forecast_targets();
        assert_eq!(targets[1], vec![10.5, 10.5, 9.5]);
        assert_eq!(extract_low_frequency(&c), vec![10.5, 10.5, 9.5]);
    }

    proptest! {
        #[test]
        fn counts_agree_with_oracle(
            x in prop::collection::vec(-2.0f64..2.0, 5..80),
            m in 1usize..4,
            frac in prop::sample::select(vec![0.1, 0.2]),
        ) {
            prop_assume!(x.len() > m + 1);
            let r = frac * std_dev(&x);
            let c = match_counts(&x, m, r);
            let (b, a, _) = oracle(&x, m, r);
            prop_assert_eq!(2 * c.length_m, b);
            prop_assert_eq!(2 * c.length_m1, a);
        }

        #[test]
        fn shift_invariant(x in prop::collection::vec(-2.0f64..2.0, 20..60), shift in -100.0f64..100.0) {
            let p = SampEnParams::absolute(2, 0.5);
            let shifted: Vec<f64> = x.iter().map(|v| v + shift).collect();
            let a = sample_entropy(&x, &p);
            let b = sample_entropy(&shifted, &p);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-9 || a == b),
                (Err(_), Err(_)) => {}
                _ => {}
            }
        }

        #[test]
        fn regrouping_conserves_sum(
            raw in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 16), 1..8),
            ses in prop::collection::vec(prop::option::of(0.0f64..2.0), 8),
        ) {
            let k = raw.len();
            let set = ImfSet::new(raw.clone(), vec![0.25; 16]).unwrap();
            let c = group_by_bands(&set, ses[..k].to_vec(), &DEFAULT_BAND_EDGES).unwrap();
            prop_assert!(c.len() <= k);
            let mut seen = Vec::new();
            for m in c.members() {
                prop_assert!(m.windows(2).all(|w| w[1] == w[0] + 1));
                seen.extend(m.iter().copied());
            }
            prop_assert_eq!(seen, (0..k).collect::<Vec<_>>());
            for t in 0..16 {
                let a: f64 = raw.iter().map(|imf| imf[t]).sum();
                let b: f64 = c.components().iter().map(|comp| comp[t]).sum();
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

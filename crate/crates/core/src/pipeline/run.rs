use std::collections::BTreeMap;
use std::hash::{DefaultHasher, Hash, Hasher};

use chrono::NaiveDateTime;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clean::{clean_series, split_index, CleanConfig};
use super::ingest::{GapReport, RawSeries};
use super::metrics::{aggregate_components, compute_metrics, MetricsReport};
use crate::decomposition::{EmdConfig, Method, NoiseScale};
use crate::entropy::{recombine_by_entropy, ComponentSet, SampEnParams, DEFAULT_BAND_EDGES};
use crate::error::{Error, Result, StageExt};
use crate::gwo::{tune_lstm, HyperParams, SearchSpace, TuneBudget, TunedLstm};
use crate::neuralnet::{lstm_train, make_windows, Forecaster, LstmModel, TrainConfig, DEFAULT_WINDOW};
use crate::rng::derive_seed;
use crate::spatiotemporal::{
    extract_low_frequency, predict_low_frequency, pretrain_spatial, trace_predictions, DualPrediction,
    StationSeries,
};
use crate::timeseries::TimeSeries;

pub const VANILLA_LSTM: &str = "vanilla_lstm";
pub const GWO_LSTM: &str = "gwo_lstm";
pub const FULL: &str = "full";

/// Fixed hyperparameters of the untuned baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VanillaConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub hidden_dim: usize,
}

impl Default for VanillaConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 1024,
            epochs: 200,
            hidden_dim: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Fraction of the series used for training.
    pub split_ratio: f64,
    pub window: usize,
    pub horizon: usize,
    /// Trailing fraction of the training windows held out as GWO fitness data.
    pub validation_fraction: f64,
    /// Run the neighbour-corrected variant.
    pub spatial: bool,
    /// Decompose causally instead of decomposing the whole series once.
    pub strict: bool,
    /// Samples of history per causal decomposition in strict mode.
    pub strict_history: usize,
    pub method: Method,
    pub decomposition: EmdConfig,
    pub sampen: SampEnParams,
    pub band_edges: Vec<f64>,
    pub clean: CleanConfig,
    pub vanilla: VanillaConfig,
    pub search: SearchSpace,
    pub budget: TuneBudget,
}

impl Default for PipelineConfig {
    /// Settings as published: CEEMDAN with noise 2000 and 500 realizations,
    /// window 3, an 8:2 split, 200 training epochs.
    fn default() -> Self {
        Self {
            seed: 0,
            split_ratio: 0.8,
            window: DEFAULT_WINDOW,
            horizon: 1,
            validation_fraction: 0.2,
            spatial: true,
            strict: false,
            strict_history: 672,
            method: Method::Ceemdan,
            decomposition: EmdConfig::default(),
            sampen: SampEnParams::default(),
            band_edges: DEFAULT_BAND_EDGES.to_vec(),
            clean: CleanConfig::default(),
            vanilla: VanillaConfig::default(),
            search: SearchSpace::lstm_default(),
            budget: TuneBudget::default(),
        }
    }
}

impl PipelineConfig {
    /// Defaults with noise at 0.2 of the signal's standard deviation, for
    /// series whose scale is far from the published data.
    pub fn desk() -> Self {
        Self {
            decomposition: EmdConfig {
                noise_std: 0.2,
                noise_scale: NoiseScale::RelativeToStd,
                ..EmdConfig::default()
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio <= 1.0) {
            return Err(Error::Config(format!("split_ratio must be in (0, 1], got {}", self.split_ratio)));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config("validation_fraction must be in (0, 1)".into()));
        }
        if self.window == 0 || self.horizon == 0 {
            return Err(Error::Config("window and horizon must be at least 1".into()));
        }
        self.decomposition.validate()?;
        self.sampen.validate()?;
        crate::entropy::validate_band_edges(&self.band_edges)?;
        self.search.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn decomposition_variant(&self) -> String {
        format!("{}_se_gwo_lstm", self.method)
    }
}

/// One regrouped component of the target station.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    pub members: Vec<usize>,
    pub band: usize,
    pub mean_entropy: f64,
    pub params: HyperParams,
    pub validation_mse: f64,
    /// Forecasts over the test span.
    pub prediction: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub target: String,
    pub train_len: usize,
    /// Metrics per variant, keyed by variant name.
    pub metrics: BTreeMap<String, MetricsReport>,
    pub test_times: Vec<NaiveDateTime>,
    pub actual: Vec<f64>,
    pub predictions: BTreeMap<String, Vec<f64>>,
    pub imf_entropies: Vec<Option<f64>>,
    pub components: Vec<ComponentReport>,
    /// Full-length regrouped component series (forecast targets).
    pub component_series: Vec<Vec<f64>>,
    pub low_frequency: usize,
    pub gwo_params: HyperParams,
    pub spatial_trace: Vec<DualPrediction>,
    /// Hash of each stage's inputs.
    pub stage_hashes: BTreeMap<String, String>,
    pub gaps: Vec<GapReport>,
    pub notes: Vec<String>,
}

impl PipelineReport {
    pub fn metrics_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.metrics)?)
    }
}

fn hash_series(parts: &[&[f64]]) -> String {
    let mut h = DefaultHasher::new();
    for p in parts {
        p.len().hash(&mut h);
        for v in *p {
            v.to_bits().hash(&mut h);
        }
    }
    format!("{:016x}", h.finish())
}

/// Run the pipeline on stations that need no cleaning of gaps; the first
/// station is the target and neighbour lists come from the stations.
pub fn run_on_stations(config: &PipelineConfig, stations: &[StationSeries]) -> Result<PipelineReport> {
    let target = stations
        .first()
        .ok_or_else(|| Error::Config("no stations".into()))?;
    let raw: Vec<RawSeries> = stations
        .iter()
        .map(|s| RawSeries {
            station_id: s.station_id.clone(),
            ..RawSeries::from(&s.series)
        })
        .collect();
    let adjacency = stations
        .iter()
        .map(|s| (s.station_id.clone(), s.neighbors.clone()))
        .collect();
    let target_id = target.station_id.clone();
    run_pipeline(config, &raw, &adjacency, &target_id)
}

/// Clean, split, decompose, regroup, tune and forecast every variant, then
/// score each variant on the test span.
///
/// Variants: the untuned LSTM, the GWO-tuned LSTM on the raw series, the
/// decomposition variant (one tuned LSTM per entropy component, summed) and,
/// with `config.spatial`, the full method whose low-frequency component
/// switches between the temporal and neighbour-fed forecasters.
pub fn run_pipeline(
    config: &PipelineConfig,
    raw: &[RawSeries],
    adjacency: &BTreeMap<String, Vec<String>>,
    target_id: &str,
) -> Result<PipelineReport> {
    config.validate().stage("config")?;
    let gaps: Vec<GapReport> = raw.iter().map(RawSeries::gap_report).collect();
    let cleaned: BTreeMap<&str, TimeSeries> = raw
        .iter()
        .map(|r| Ok((r.station_id.as_str(), clean_series(r, &config.clean)?)))
        .collect::<Result<_>>()
        .stage("clean")?;
    let target = cleaned
        .get(target_id)
        .ok_or_else(|| Error::Config(format!("target station {target_id} not in data")))
        .stage("clean")?;
    let neighbor_ids: Vec<&str> = adjacency
        .get(target_id)
        .map(|v| v.iter().map(String::as_str).filter(|n| cleaned.contains_key(n)).collect())
        .unwrap_or_default();
    for n in &neighbor_ids {
        if !target.is_aligned_with(&cleaned[n]) {
            return Err(Error::Alignment(format!("station {n} is not aligned with {target_id}"))).stage("clean");
        }
    }

    let x = target.values();
    let n = x.len();
    let n_train = split_index(n, config.split_ratio).stage("split")?;
    if n_train == n {
        return Err(Error::Config("split leaves no test samples".into())).stage("split");
    }
    let span_start = n_train.max(config.window + config.horizon - 1);
    let span = span_start..n;
    let actual = x[span.clone()].to_vec();
    let test_times = span.clone().map(|t| target.time_at(t)).collect();
    let mut hashes = BTreeMap::new();
    let mut notes = Vec::new();
    let mut predictions = BTreeMap::new();

    let trainer = ComponentTrainer { config, n_train };

    hashes.insert(VANILLA_LSTM.to_string(), hash_series(&[&x[..n_train]]));
    let vanilla = trainer.vanilla(x, derive_seed(config.seed, &[1])).stage(VANILLA_LSTM)?;
    predictions.insert(VANILLA_LSTM.to_string(), vanilla.predict_range(&[x], span.clone()).stage(VANILLA_LSTM)?);

    hashes.insert(GWO_LSTM.to_string(), hash_series(&[&x[..n_train]]));
    let (gwo, gwo_tuned) = trainer.tuned(x, derive_seed(config.seed, &[2])).stage(GWO_LSTM)?;
    predictions.insert(GWO_LSTM.to_string(), gwo.predict_range(&[x], span.clone()).stage(GWO_LSTM)?);

    let decomp_name = config.decomposition_variant();
    let emd = EmdConfig {
        master_seed: derive_seed(config.seed, &[3, 0]),
        ..config.decomposition.clone()
    };
    hashes.insert("decompose".into(), hash_series(&[x]));
    let (sets, targets) = if config.strict {
        let train_ts = TimeSeries::new(x[..n_train].to_vec(), target.start(), target.step()).stage("decompose")?;
        let set = decompose_and_group(&train_ts, config, &emd).stage("decompose")?;
        let t = set.forecast_targets();
        (set, t)
    } else {
        let set = decompose_and_group(target, config, &emd).stage("decompose")?;
        let t = set.forecast_targets();
        (set, t)
    };
    let low = sets.low_frequency_target();
    let comp_refs: Vec<&[f64]> = targets.iter().map(Vec::as_slice).collect();
    hashes.insert("component_models".into(), hash_series(&comp_refs));

    let trained: Vec<(Forecaster, TunedLstm)> = targets
        .par_iter()
        .enumerate()
        .map(|(c, series)| trainer.tuned(series, derive_seed(config.seed, &[4, c as u64])))
        .collect::<Result<_>>()
        .stage("component_models")?;

    let component_predictions: Vec<Vec<f64>> = if config.strict {
        strict_predictions(config, x, &sets, &trained, span.clone(), target).stage("component_models")?
    } else {
        trained
            .iter()
            .zip(&targets)
            .map(|((f, _), series)| f.predict_range(&[series], span.clone()))
            .collect::<Result<_>>()
            .stage("component_models")?
    };
    predictions.insert(
        decomp_name.clone(),
        aggregate_components(&component_predictions).stage("aggregate")?,
    );

    let mut spatial_trace = Vec::new();
    if config.spatial && config.strict {
        notes.push("spatial variant skipped: strict mode decomposes causally per step".into());
    } else if config.spatial {
        if neighbor_ids.is_empty() {
            return Err(Error::Config(format!("station {target_id} has no neighbours for the spatial variant")))
                .stage("spatial");
        }
        let neighbor_low: Vec<Vec<f64>> = neighbor_ids
            .par_iter()
            .enumerate()
            .map(|(j, id)| {
                let cfg = EmdConfig {
                    master_seed: derive_seed(config.seed, &[3, 1 + j as u64]),
                    ..config.decomposition.clone()
                };
                Ok(extract_low_frequency(&decompose_and_group(&cleaned[id], config, &cfg)?))
            })
            .collect::<Result<_>>()
            .stage("spatial")?;
        let target_low = &targets[low];
        let mut parts: Vec<&[f64]> = vec![target_low];
        parts.extend(neighbor_low.iter().map(Vec::as_slice));
        hashes.insert("spatial".into(), hash_series(&parts));

        let tuned = &trained[low].1;
        let st_config = TrainConfig {
            seed: derive_seed(config.seed, &[5]),
            ..tuned.config.clone()
        };
        let train_neighbors: Vec<Vec<f64>> = neighbor_low.iter().map(|v| v[..n_train].to_vec()).collect();
        let spatial = pretrain_spatial(
            &target_low[..n_train],
            &train_neighbors,
            config.window,
            tuned.params.hidden_dim,
            &st_config,
        )
        .stage("spatial")?;
        let trace = predict_low_frequency(target_low, &neighbor_low, &trained[low].0, Some(&spatial), span.clone())
            .stage("spatial")?;
        let mut full = component_predictions.clone();
        full[low] = trace_predictions(&trace);
        predictions.insert(FULL.to_string(), aggregate_components(&full).stage("aggregate")?);
        spatial_trace = trace;
    }

    let metrics = predictions
        .iter()
        .map(|(k, p)| Ok((k.clone(), compute_metrics(&actual, p)?)))
        .collect::<Result<BTreeMap<_, _>>>()
        .stage("metrics")?;

    let components = trained
        .iter()
        .zip(component_predictions)
        .enumerate()
        .map(|(c, ((_, t), prediction))| ComponentReport {
            members: sets.members().get(c).cloned().unwrap_or_default(),
            band: sets.bands().get(c).copied().unwrap_or(0),
            mean_entropy: if sets.is_empty() { 0.0 } else { sets.mean_entropy(c) },
            params: t.params,
            validation_mse: t.validation_mse,
            prediction,
        })
        .collect();

    Ok(PipelineReport {
        target: target_id.to_string(),
        train_len: n_train,
        metrics,
        test_times,
        actual,
        predictions,
        imf_entropies: sets.entropies().to_vec(),
        components,
        component_series: targets,
        low_frequency: low,
        gwo_params: gwo_tuned.params,
        spatial_trace,
        stage_hashes: hashes,
        gaps,
        notes,
    })
}

fn decompose_and_group(series: &TimeSeries, config: &PipelineConfig, emd: &EmdConfig) -> Result<ComponentSet> {
    let set = config.method.decompose(series, emd)?;
    recombine_by_entropy(&set, &config.sampen, &config.band_edges)
}

struct ComponentTrainer<'a> {
    config: &'a PipelineConfig,
    n_train: usize,
}

impl ComponentTrainer<'_> {
    fn vanilla(&self, series: &[f64], seed: u64) -> Result<Forecaster> {
        let c = &self.config;
        let data = make_windows(&series[..self.n_train], c.window, c.horizon)?;
        let init = LstmModel::init(1, c.vanilla.hidden_dim, seed)?;
        let cfg = TrainConfig {
            learning_rate: c.vanilla.learning_rate,
            batch_size: c.vanilla.batch_size,
            epochs: c.vanilla.epochs,
            seed,
            ..TrainConfig::default()
        };
        let (model, _) = lstm_train(&init, &data, &cfg)?;
        Forecaster::new(model, data.scaler().clone(), c.window, c.horizon)
    }

    fn tuned(&self, series: &[f64], seed: u64) -> Result<(Forecaster, TunedLstm)> {
        let c = &self.config;
        let data = make_windows(&series[..self.n_train], c.window, c.horizon)?;
        let fit = ((data.len() as f64) * (1.0 - c.validation_fraction)).round() as usize;
        let (train, val) = data.split_at(fit);
        let tuned = tune_lstm(&train, &val, &c.search, &c.budget, seed)?;
        let f = Forecaster::new(tuned.model.clone(), data.scaler().clone(), c.window, c.horizon)?;
        Ok((f, tuned))
    }
}

/// Causal component forecasts: before forecasting `t`, the history
/// `x[t - horizon + 1 - strict_history ..= t - horizon]` is decomposed and
/// regrouped, and each band's trailing window feeds the model trained on
/// that band. Bands absent from the causal decomposition feed zeros.
fn strict_predictions(
    config: &PipelineConfig,
    x: &[f64],
    train_sets: &ComponentSet,
    trained: &[(Forecaster, TunedLstm)],
    span: std::ops::Range<usize>,
    target: &TimeSeries,
) -> Result<Vec<Vec<f64>>> {
    let bands: Vec<usize> = if train_sets.is_empty() {
        vec![config.band_edges.len() - 2]
    } else {
        train_sets.bands().to_vec()
    };
    let low_band = bands[train_sets.low_frequency_target()];
    let per_step: Vec<Vec<f64>> = span
        .clone()
        .into_par_iter()
        .map(|t| {
            let end = t + 1 - config.horizon;
            let begin = end.saturating_sub(config.strict_history);
            let history = TimeSeries::new(x[begin..end].to_vec(), target.time_at(begin), target.step())?;
            let emd = EmdConfig {
                master_seed: derive_seed(config.seed, &[6, t as u64]),
                ..config.decomposition.clone()
            };
            let set = decompose_and_group(&history, config, &emd)?;
            let mut by_band: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            let targets = set.forecast_targets();
            let set_bands: Vec<usize> = if set.is_empty() { vec![low_band] } else { set.bands().to_vec() };
            for (series, &b) in targets.iter().zip(&set_bands) {
                let acc = by_band.entry(b).or_insert_with(|| vec![0.0; series.len()]);
                for (a, v) in acc.iter_mut().zip(series) {
                    *a += v;
                }
            }
            trained
                .iter()
                .zip(&bands)
                .map(|((f, _), b)| {
                    let zeros = vec![0.0; history.len()];
                    let series = by_band.get(b).unwrap_or(&zeros);
                    let len = series.len();
                    let mut padded = series.clone();
                    padded.resize(len + config.horizon, 0.0);
                    f.predict_at(&[&padded], len + config.horizon - 1)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..trained.len()).map(|c| per_step.iter().map(|s| s[c]).collect()).collect())
}

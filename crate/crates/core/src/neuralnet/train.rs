use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::WindowDataset;
use super::lstm::{LstmModel, Workspace};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 1024,
            epochs: 200,
            seed: 0,
            clip_norm: Some(5.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Mini-batch gradient descent on mean squared error.
///
/// Samples are reshuffled every epoch from a stream seeded by
/// `config.seed`; the effective batch is `min(batch_size, samples)`. Returns
/// the trained model and the mean training loss of each epoch, accumulated
/// over the epoch's batches before their updates.
pub fn lstm_train(
    model: &LstmModel,
    data: &WindowDataset,
    config: &TrainConfig,
) -> Result<(LstmModel, Vec<f64>)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset {
            len: 0,
            window: data.window(),
            horizon: data.horizon(),
        });
    }
    if data.features() != model.input_dim() {
        return Err(Error::InvalidInput(format!(
            "dataset has {} features, model expects {}",
            data.features(),
            model.input_dim()
        )));
    }
    let mut model = model.clone();
    let mut history = Vec::with_capacity(config.epochs);
    let n = data.len();
    let batch = config.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(config.seed, 1);
    let mut ws = Workspace::new(&model, data.window());
    let mut grad = vec![0.0; model.params().len()];

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let y = model.forward_into(data.input(i), &mut ws);
                let err = y - data.target(i);
                total += err * err;
                model.backward_into(&mut ws, 2.0 * err * scale, &mut grad);
            }
            if let Some(max_norm) = config.clip_norm {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > max_norm {
                    let s = max_norm / norm;
                    grad.iter_mut().for_each(|g| *g *= s);
                }
            }
            for (p, g) in model.params_mut().iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
        }
        let loss = total / n as f64;
        if !loss.is_finite() || model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence { epoch, loss });
        }
        history.push(loss);
    }
    Ok((model, history))
}

/// Mean squared error of `model` over `data` (scaled units).
pub fn evaluate_mse(model: &LstmModel, data: &WindowDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset {
            len: 0,
            window: data.window(),
            horizon: data.horizon(),
        });
    }
    let mut ws = Workspace::new(model, data.window());
    let mut total = 0.0;
    for i in 0..data.len() {
        let e = model.forward_into(data.input(i), &mut ws) - data.target(i);
        total += e * e;
    }
    Ok(total / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::make_windows;

    #[test]
    fn zero_epochs_is_identity() {
        let d = make_windows(&[1.0, 3.0, 2.0, 5.0, 4.0], 2, 1).unwrap();
        let m = LstmModel::init(1, 4, 1).unwrap();
        let (out, hist) = lstm_train(&m, &d, &TrainConfig { epochs: 0, ..Default::default() }).unwrap();
        assert_eq!(out, m);
        assert!(hist.is_empty());
    }

    #[test]
    fn ramp_loss_decreases() {
        let x: Vec<f64> = (0..60).map(f64::from).collect();
        let d = make_windows(&x, 3, 1).unwrap();
        let m = LstmModel::init(1, 6, 2).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            batch_size: 8,
            epochs: 30,
            seed: 4,
            clip_norm: Some(5.0),
        };
        let (_, hist) = lstm_train(&m, &d, &cfg).unwrap();
        assert!(hist.last().unwrap() < &hist[0], "{hist:?}");
    }

    #[test]
    fn sine_converges() {
        let x: Vec<f64> = (0..400).map(|t| (t as f64 * 2.0 * std::f64::consts::PI / 24.0).sin()).collect();
        let d = make_windows(&x, 3, 1).unwrap();
        let m = LstmModel::init(1, 8, 7).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.2,
            batch_size: 16,
            epochs: 200,
            seed: 7,
            clip_norm: Some(5.0),
        };
        let (trained, hist) = lstm_train(&m, &d, &cfg).unwrap();
        let mse = evaluate_mse(&trained, &d).unwrap();
        assert!(mse < 1e-3, "final mse {mse}, last epoch {:?}", hist.last());
    }

    #[test]
    fn same_seed_same_history() {
        let x: Vec<f64> = (0..80).map(|t| (t as f64 * 0.4).sin()).collect();
        let d = make_windows(&x, 3, 1).unwrap();
        let m = LstmModel::init(1, 5, 1).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.1,
            batch_size: 10,
            epochs: 5,
            seed: 99,
            clip_norm: Some(5.0),
        };
        let a = lstm_train(&m, &d, &cfg).unwrap();
        let b = lstm_train(&m, &d, &cfg).unwrap();
        assert_eq!(a.1, b.1);
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn divergence_names_epoch() {
        let x: Vec<f64> = (0..40).map(|t| (t as f64 * 0.4).sin()).collect();
        let d = make_windows(&x, 3, 1).unwrap();
        let m = LstmModel::init(1, 4, 1).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e300,
            batch_size: 4,
            epochs: 3,
            seed: 0,
            clip_norm: None,
        };
        match lstm_train(&m, &d, &cfg) {
            Err(Error::Divergence { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_config() {
        let d = make_windows(&[1.0, 2.0, 4.0, 3.0], 2, 1).unwrap();
        let m = LstmModel::init(1, 2, 0).unwrap();
        let cfg = TrainConfig { learning_rate: 0.0, ..Default::default() };
        assert!(lstm_train(&m, &d, &cfg).is_err());
    }
}

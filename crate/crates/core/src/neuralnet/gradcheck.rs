//! Finite-difference verification of the BPTT gradient.

use super::lstm::{LstmModel, Workspace};
use crate::error::Result;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Denominator floor for the relative error, so parameters whose true
/// gradient is zero compare on an absolute scale.
const RELATIVE_FLOOR: f64 = 1e-6;

/// Gradient of the squared error `(prediction - target)^2` with respect to
/// every parameter, via BPTT.
pub fn analytic_gradient(model: &LstmModel, sequence: &[f64], target: f64) -> Result<Vec<f64>> {
    model.check_sequence(sequence)?;
    let mut ws = Workspace::new(model, sequence.len() / model.input_dim());
    let y = model.forward_into(sequence, &mut ws);
    let mut grad = vec![0.0; model.params().len()];
    model.backward_into(&mut ws, 2.0 * (y - target), &mut grad);
    Ok(grad)
}

/// Central differences of the squared error over every parameter.
pub fn numeric_gradient(
    model: &LstmModel,
    sequence: &[f64],
    target: f64,
    step: f64,
) -> Result<Vec<f64>> {
    model.check_sequence(sequence)?;
    let mut probe = model.clone();
    let loss = |m: &LstmModel| -> Result<f64> {
        let y = m.predict_flat(sequence)?;
        Ok((y - target) * (y - target))
    };
    let mut grad = Vec::with_capacity(model.params().len());
    for k in 0..model.params().len() {
        let orig = probe.params()[k];
        probe.params_mut()[k] = orig + step;
        let up = loss(&probe)?;
        probe.params_mut()[k] = orig - step;
        let down = loss(&probe)?;
        probe.params_mut()[k] = orig;
        grad.push((up - down) / (2.0 * step));
    }
    Ok(grad)
}

/// Largest `|analytic - numeric| / max(|analytic|, |numeric|, 1e-6)` over
/// all parameters for one `(sequence, target)` sample.
pub fn gradient_check(model: &LstmModel, sequence: &[f64], target: f64) -> Result<f64> {
    let a = analytic_gradient(model, sequence, target)?;
    let n = numeric_gradient(model, sequence, target, FD_STEP)?;
    Ok(a.iter()
        .zip(&n)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(RELATIVE_FLOOR))
        .fold(0.0, f64::max))
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Gate blocks in the stacked gate matrix, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Forget,
    Input,
    Output,
    Candidate,
}

impl Gate {
    fn block(self) -> usize {
        match self {
            Gate::Forget => 0,
            Gate::Input => 1,
            Gate::Output => 2,
            Gate::Candidate => 3,
        }
    }
}

/// Single-layer LSTM with a linear scalar head.
///
/// Parameters live in one flat vector:
/// `[W (4H x (I+H), row-major, blocks f,i,o,g) | b (4H) | w_y (H) | b_y]`.
/// Each gate row multiplies the concatenation `[x_t, h_{t-1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    input_dim: usize,
    hidden_dim: usize,
    params: Vec<f64>,
}

impl LstmModel {
    pub fn param_count(input_dim: usize, hidden_dim: usize) -> usize {
        4 * hidden_dim * (input_dim + hidden_dim) + 4 * hidden_dim + hidden_dim + 1
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::InvalidInput(
                "LSTM input and hidden dimensions must be positive".into(),
            ));
        }
        Ok(Self {
            input_dim,
            hidden_dim,
            params: vec![0.0; Self::param_count(input_dim, hidden_dim)],
        })
    }

    /// Uniform initialisation in `[-1/sqrt(H), 1/sqrt(H)]`.
    pub fn init(input_dim: usize, hidden_dim: usize, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(input_dim, hidden_dim)?;
        let bound = 1.0 / (hidden_dim as f64).sqrt();
        let mut rng = stream_rng(seed, 0);
        for p in &mut model.params {
            *p = rng.random_range(-bound..=bound);
        }
        Ok(model)
    }

    pub fn from_params(input_dim: usize, hidden_dim: usize, params: Vec<f64>) -> Result<Self> {
        let expected = Self::param_count(input_dim, hidden_dim);
        if params.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("LSTM parameters must be finite".into()));
        }
        let mut m = Self::zeros(input_dim, hidden_dim)?;
        m.params = params;
        Ok(m)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn cols(&self) -> usize {
        self.input_dim + self.hidden_dim
    }

    fn bias_offset(&self) -> usize {
        4 * self.hidden_dim * self.cols()
    }

    fn head_offset(&self) -> usize {
        self.bias_offset() + 4 * self.hidden_dim
    }

    /// Set one gate's weight block (`H x (I+H)`, row-major) and bias.
    pub fn set_gate(&mut self, gate: Gate, weights: &[f64], bias: &[f64]) -> Result<()> {
        let (h, cols) = (self.hidden_dim, self.cols());
        if weights.len() != h * cols || bias.len() != h {
            return Err(Error::InvalidInput(format!(
                "gate block must be {h}x{cols} with {h} biases"
            )));
        }
        let w0 = gate.block() * h * cols;
        self.params[w0..w0 + h * cols].copy_from_slice(weights);
        let b0 = self.bias_offset() + gate.block() * h;
        self.params[b0..b0 + h].copy_from_slice(bias);
        Ok(())
    }

    pub fn set_output(&mut self, weights: &[f64], bias: f64) -> Result<()> {
        if weights.len() != self.hidden_dim {
            return Err(Error::InvalidInput("output weights must have hidden_dim entries".into()));
        }
        let o = self.head_offset();
        self.params[o..o + self.hidden_dim].copy_from_slice(weights);
        self.params[o + self.hidden_dim] = bias;
        Ok(())
    }

    /// Range of the output-layer parameters (`w_y` and `b_y`) in [`Self::params`].
    pub fn output_param_range(&self) -> std::ops::Range<usize> {
        self.head_offset()..self.params.len()
    }

    /// Prediction for a flat `steps x input_dim` sequence.
    pub fn predict_flat(&self, sequence: &[f64]) -> Result<f64> {
        self.check_sequence(sequence)?;
        let mut ws = Workspace::new(self, sequence.len() / self.input_dim);
        Ok(self.forward_into(sequence, &mut ws))
    }

    pub(crate) fn check_sequence(&self, sequence: &[f64]) -> Result<()> {
        if sequence.is_empty() || sequence.len() % self.input_dim != 0 {
            return Err(Error::InvalidInput(format!(
                "sequence of {} values is not a positive multiple of input_dim {}",
                sequence.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Forward pass recording activations in `ws`.
    pub(crate) fn forward_into(&self, sequence: &[f64], ws: &mut Workspace) -> f64 {
        let (i_dim, h) = (self.input_dim, self.hidden_dim);
        let cols = self.cols();
        let steps = sequence.len() / i_dim;
        ws.ensure(self, steps);
        let w = &self.params[..self.bias_offset()];
        let b = &self.params[self.bias_offset()..self.head_offset()];
        for t in 0..steps {
            let (prev_h, prev_c) = if t == 0 {
                (None, None)
            } else {
                (Some(t - 1), Some(t - 1))
            };
            let z = &mut ws.z[t * cols..(t + 1) * cols];
            z[..i_dim].copy_from_slice(&sequence[t * i_dim..(t + 1) * i_dim]);
            match prev_h {
                Some(p) => z[i_dim..].copy_from_slice(&ws.h[p * h..(p + 1) * h]),
                None => z[i_dim..].iter_mut().for_each(|v| *v = 0.0),
            }
            let gates = &mut ws.gates[t * 4 * h..(t + 1) * 4 * h];
            for (r, g) in gates.iter_mut().enumerate() {
                let row = &w[r * cols..(r + 1) * cols];
                *g = b[r] + dot(row, z);
            }
            for k in 0..h {
                gates[k] = sigmoid(gates[k]);
                gates[h + k] = sigmoid(gates[h + k]);
                gates[2 * h + k] = sigmoid(gates[2 * h + k]);
                gates[3 * h + k] = gates[3 * h + k].tanh();
            }
            for k in 0..h {
                let c_prev = prev_c.map_or(0.0, |p| ws.c[p * h + k]);
                let c = gates[k] * c_prev + gates[h + k] * gates[3 * h + k];
                let tc = c.tanh();
                ws.c[t * h + k] = c;
                ws.tanh_c[t * h + k] = tc;
                ws.h[t * h + k] = gates[2 * h + k] * tc;
            }
        }
        ws.steps = steps;
        let head = &self.params[self.head_offset()..];
        let last = &ws.h[(steps - 1) * h..steps * h];
        dot(&head[..h], last) + head[h]
    }

    /// Accumulate `scale * d(prediction)/d(params)` into `grad`, using the
    /// activations from the preceding [`Self::forward_into`].
    pub(crate) fn backward_into(&self, ws: &mut Workspace, scale: f64, grad: &mut [f64]) {
        let (i_dim, h) = (self.input_dim, self.hidden_dim);
        let cols = self.cols();
        let steps = ws.steps;
        let (bias_off, head_off) = (self.bias_offset(), self.head_offset());
        let w = &self.params[..bias_off];
        let w_y = &self.params[head_off..head_off + h];

        let last = &ws.h[(steps - 1) * h..steps * h];
        for k in 0..h {
            grad[head_off + k] += scale * last[k];
            ws.dh[k] = scale * w_y[k];
            ws.dc[k] = 0.0;
        }
        grad[head_off + h] += scale;

        for t in (0..steps).rev() {
            let gates = &ws.gates[t * 4 * h..(t + 1) * 4 * h];
            for k in 0..h {
                let (f, i, o, g) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
                let tc = ws.tanh_c[t * h + k];
                let c_prev = if t == 0 { 0.0 } else { ws.c[(t - 1) * h + k] };
                let dh = ws.dh[k];
                let dc = ws.dc[k] + dh * o * (1.0 - tc * tc);
                ws.da[k] = dc * c_prev * f * (1.0 - f);
                ws.da[h + k] = dc * g * i * (1.0 - i);
                ws.da[2 * h + k] = dh * tc * o * (1.0 - o);
                ws.da[3 * h + k] = dc * i * (1.0 - g * g);
                ws.dc[k] = dc * f;
            }
            let z = &ws.z[t * cols..(t + 1) * cols];
            ws.dz.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..4 * h {
                let da = ws.da[r];
                if da == 0.0 {
                    continue;
                }
                let row = &w[r * cols..(r + 1) * cols];
                let grow = &mut grad[r * cols..(r + 1) * cols];
                for j in 0..cols {
                    grow[j] += da * z[j];
                    ws.dz[j] += da * row[j];
                }
                grad[bias_off + r] += da;
            }
            ws.dh[..h].copy_from_slice(&ws.dz[i_dim..]);
        }
    }
}

/// Prediction for a `steps x input_dim` sequence of rows.
pub fn lstm_forward(model: &LstmModel, sequence: &[Vec<f64>]) -> Result<f64> {
    if let Some(row) = sequence.iter().find(|r| r.len() != model.input_dim()) {
        return Err(Error::InvalidInput(format!(
            "sequence row has {} features, model expects {}",
            row.len(),
            model.input_dim()
        )));
    }
    let flat: Vec<f64> = sequence.iter().flatten().copied().collect();
    model.predict_flat(&flat)
}

/// Reusable activation and gradient buffers.
#[derive(Debug, Default)]
pub(crate) struct Workspace {
    steps: usize,
    z: Vec<f64>,
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    dh: Vec<f64>,
    dc: Vec<f64>,
    da: Vec<f64>,
    dz: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(model: &LstmModel, steps: usize) -> Self {
        let mut ws = Self::default();
        ws.ensure(model, steps);
        ws
    }

    fn ensure(&mut self, model: &LstmModel, steps: usize) {
        let h = model.hidden_dim;
        let cols = model.cols();
        resize(&mut self.z, steps * cols);
        resize(&mut self.gates, steps * 4 * h);
        resize(&mut self.c, steps * h);
        resize(&mut self.tanh_c, steps * h);
        resize(&mut self.h, steps * h);
        resize(&mut self.dh, h);
        resize(&mut self.dc, h);
        resize(&mut self.da, 4 * h);
        resize(&mut self.dz, cols);
    }

    #[cfg(test)]
    pub(crate) fn hidden(&self) -> &[f64] {
        &self.h
    }

    #[cfg(test)]
    pub(crate) fn cells(&self) -> &[f64] {
        &self.c
    }
}

fn resize(v: &mut Vec<f64>, n: usize) {
    if v.len() != n {
        v.resize(n, 0.0);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

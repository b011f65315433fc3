//! Single-layer LSTM regressor with a scalar affine head, and its exact
//! gradient by backpropagation through time.
//!
//! Per step, with `x_t` the input row and `h_{t-1}`, `c_{t-1}` the previous
//! states (both zero before the first step):
//!
//! ```text
//! i = σ(W_i x + U_i h + b_i)    f = σ(W_f x + U_f h + b_f)
//! o = σ(W_o x + U_o h + b_o)    g = tanh(W_g x + U_g h + b_g)
//! c_t = f ⊙ c_{t-1} + i ⊙ g     h_t = o ⊙ tanh(c_t)
//! ```
//!
//! and the prediction is `w_out · h_T + b_out`.

use serde::{Deserialize, Serialize};

use crate::dataset::Window;
use crate::error::{Error, Result};
use crate::features::NUM_FEATURES;

/// Gate blocks, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Cell = 3,
}

pub const GATES: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Output, Gate::Cell];

/// All trainable weights. Gate matrices are stacked gate-major
/// (`[i; f; o; g]`), each block row-major with `hidden_dim` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// `4H × I` input weights.
    pub w_x: Vec<f64>,
    /// `4H × H` recurrent weights.
    pub w_h: Vec<f64>,
    /// `4H` gate biases.
    pub bias: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let rows = 4 * hidden_dim;
        LstmParams {
            input_dim,
            hidden_dim,
            w_x: vec![0.0; rows * input_dim],
            w_h: vec![0.0; rows * hidden_dim],
            bias: vec![0.0; rows],
            w_out: vec![0.0; hidden_dim],
            b_out: 0.0,
        }
    }

    pub fn num_params(&self) -> usize {
        self.w_x.len() + self.w_h.len() + self.bias.len() + self.w_out.len() + 1
    }

    pub fn check(&self) -> Result<()> {
        let (i, h) = (self.input_dim, self.hidden_dim);
        let ok = i > 0
            && h > 0
            && self.w_x.len() == 4 * h * i
            && self.w_h.len() == 4 * h * h
            && self.bias.len() == 4 * h
            && self.w_out.len() == h;
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "inconsistent LSTM parameter shapes for input {i}, hidden {h}"
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }

    /// Every coordinate in a fixed order: `w_x`, `w_h`, `bias`, `w_out`, `b_out`.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.w_x
            .iter()
            .chain(&self.w_h)
            .chain(&self.bias)
            .chain(&self.w_out)
            .chain(std::iter::once(&self.b_out))
            .copied()
    }

    /// Mutable views in the same order as [`LstmParams::iter`].
    pub fn slices_mut(&mut self) -> [&mut [f64]; 5] {
        [
            &mut self.w_x,
            &mut self.w_h,
            &mut self.bias,
            &mut self.w_out,
            std::slice::from_mut(&mut self.b_out),
        ]
    }

    /// Coordinate `k` in [`LstmParams::iter`] order.
    pub fn coord_mut(&mut self, mut k: usize) -> &mut f64 {
        for slice in self.slices_mut() {
            if k < slice.len() {
                return &mut slice[k];
            }
            k -= slice.len();
        }
        panic!("parameter coordinate out of range");
    }

    /// Block of `w_x` for one gate (`H × I`).
    pub fn gate_input_weights(&self, gate: Gate) -> &[f64] {
        let n = self.hidden_dim * self.input_dim;
        &self.w_x[gate as usize * n..(gate as usize + 1) * n]
    }

    /// Block of `w_h` for one gate (`H × H`).
    pub fn gate_recurrent_weights(&self, gate: Gate) -> &[f64] {
        let n = self.hidden_dim * self.hidden_dim;
        &self.w_h[gate as usize * n..(gate as usize + 1) * n]
    }

    pub fn gate_bias(&self, gate: Gate) -> &[f64] {
        let h = self.hidden_dim;
        &self.bias[gate as usize * h..(gate as usize + 1) * h]
    }

    pub fn gate_bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        let h = self.hidden_dim;
        &mut self.bias[gate as usize * h..(gate as usize + 1) * h]
    }
}

/// Cached activations of one forward pass.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub steps: usize,
    /// Post-activation gates per step, `T × 4H`, in [`GATES`] order.
    pub gates: Vec<f64>,
    /// Cell states `c_0..=c_T`, `(T+1) × H`, `c_0 = 0`.
    pub cell: Vec<f64>,
    /// `tanh(c_t)` for `t = 1..=T`, `T × H`.
    pub cell_tanh: Vec<f64>,
    /// Hidden states `h_0..=h_T`, `(T+1) × H`, `h_0 = 0`.
    pub hidden: Vec<f64>,
}

/// Dot product with independent partial sums so the loop pipelines.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Runs the recurrence over a flattened `steps × input_dim` input.
pub fn forward_sequence(params: &LstmParams, inputs: &[f64]) -> Result<(f64, Trace)> {
    let mut trace = Trace::default();
    let y = forward_into(params, inputs, &mut trace)?;
    Ok((y, trace))
}

pub(crate) fn forward_into(params: &LstmParams, inputs: &[f64], trace: &mut Trace) -> Result<f64> {
    let (n_in, h) = (params.input_dim, params.hidden_dim);
    if inputs.is_empty() || inputs.len() % n_in != 0 {
        return Err(Error::DimensionMismatch(format!(
            "input of length {} is not a whole number of {n_in}-wide steps",
            inputs.len()
        )));
    }
    let steps = inputs.len() / n_in;
    let rows = 4 * h;
    trace.steps = steps;
    trace.gates.clear();
    trace.gates.resize(steps * rows, 0.0);
    trace.cell.clear();
    trace.cell.resize((steps + 1) * h, 0.0);
    trace.hidden.clear();
    trace.hidden.resize((steps + 1) * h, 0.0);
    trace.cell_tanh.clear();
    trace.cell_tanh.resize(steps * h, 0.0);

    for t in 0..steps {
        let x = &inputs[t * n_in..(t + 1) * n_in];
        let (past_h, next_h) = trace.hidden.split_at_mut((t + 1) * h);
        let h_prev = &past_h[t * h..];
        let gates = &mut trace.gates[t * rows..(t + 1) * rows];
        for r in 0..rows {
            let wx = &params.w_x[r * n_in..(r + 1) * n_in];
            let wh = &params.w_h[r * h..(r + 1) * h];
            let acc = params.bias[r] + dot(wx, x) + dot(wh, h_prev);
            gates[r] = if r < 3 * h { sigmoid(acc) } else { acc.tanh() };
        }
        let (past_c, next_c) = trace.cell.split_at_mut((t + 1) * h);
        let c_prev = &past_c[t * h..];
        let c_next = &mut next_c[..h];
        let h_next = &mut next_h[..h];
        let tanh_c = &mut trace.cell_tanh[t * h..(t + 1) * h];
        for j in 0..h {
            let (i, f, o, g) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            c_next[j] = f * c_prev[j] + i * g;
            tanh_c[j] = c_next[j].tanh();
            h_next[j] = o * tanh_c[j];
        }
    }
    let h_last = &trace.hidden[steps * h..];
    let y = params.b_out
        + params
            .w_out
            .iter()
            .zip(h_last)
            .map(|(w, v)| w * v)
            .sum::<f64>();
    Ok(y)
}

/// Forward pass over a feature window.
pub fn lstm_forward(params: &LstmParams, window: &Window) -> Result<(f64, Trace)> {
    if params.input_dim != NUM_FEATURES {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} inputs, window rows have {NUM_FEATURES}",
            params.input_dim
        )));
    }
    forward_sequence(params, window.rows.as_flattened())
}

pub fn mse_loss(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput("loss inputs"));
    }
    let sum: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y).powi(2))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Adds `d_y · ∂y/∂θ` for one traced sequence into `grad`.
pub(crate) fn backward_into(
    params: &LstmParams,
    inputs: &[f64],
    trace: &Trace,
    d_y: f64,
    grad: &mut LstmParams,
    scratch: &mut Vec<f64>,
) {
    let (n_in, h) = (params.input_dim, params.hidden_dim);
    let rows = 4 * h;
    let steps = trace.steps;

    // scratch: dh (H) | dc (H) | da (4H) | dh_prev (H)
    scratch.clear();
    scratch.resize(3 * h + rows, 0.0);
    let (dh, rest) = scratch.split_at_mut(h);
    let (dc, rest) = rest.split_at_mut(h);
    let (da, dh_prev) = rest.split_at_mut(rows);

    let h_last = &trace.hidden[steps * h..];
    for j in 0..h {
        grad.w_out[j] += d_y * h_last[j];
        dh[j] = d_y * params.w_out[j];
    }
    grad.b_out += d_y;

    for t in (0..steps).rev() {
        let gates = &trace.gates[t * rows..(t + 1) * rows];
        let c_prev = &trace.cell[t * h..(t + 1) * h];
        let tanh_c = &trace.cell_tanh[t * h..(t + 1) * h];
        let h_prev = &trace.hidden[t * h..(t + 1) * h];
        let x = &inputs[t * n_in..(t + 1) * n_in];

        for j in 0..h {
            let (i, f, o, g) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let d_o = dh[j] * tanh_c[j];
            dc[j] += dh[j] * o * (1.0 - tanh_c[j] * tanh_c[j]);
            let d_i = dc[j] * g;
            let d_g = dc[j] * i;
            let d_f = dc[j] * c_prev[j];
            da[j] = d_i * i * (1.0 - i);
            da[h + j] = d_f * f * (1.0 - f);
            da[2 * h + j] = d_o * o * (1.0 - o);
            da[3 * h + j] = d_g * (1.0 - g * g);
            dc[j] *= f;
        }

        dh_prev.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..rows {
            let a = da[r];
            grad.bias[r] += a;
            let gx = &mut grad.w_x[r * n_in..(r + 1) * n_in];
            for k in 0..n_in {
                gx[k] += a * x[k];
            }
            let gh = &mut grad.w_h[r * h..(r + 1) * h];
            let wh = &params.w_h[r * h..(r + 1) * h];
            for k in 0..h {
                gh[k] += a * h_prev[k];
                dh_prev[k] += a * wh[k];
            }
        }
        dh.copy_from_slice(dh_prev);
    }
}

/// Batch MSE and its exact gradient over flattened input sequences.
pub fn grad_sequences(params: &LstmParams, batch: &[(&[f64], f64)]) -> Result<(f64, LstmParams)> {
    params.check()?;
    if batch.is_empty() {
        return Err(Error::EmptyInput("gradient batch"));
    }
    let n = batch.len() as f64;
    let mut grad = LstmParams::zeros(params.input_dim, params.hidden_dim);
    let mut trace = Trace::default();
    let mut scratch = Vec::new();
    let mut loss = 0.0;
    for (inputs, label) in batch {
        let y = forward_into(params, inputs, &mut trace)?;
        let err = y - label;
        loss += err * err;
        backward_into(params, inputs, &trace, 2.0 * err / n, &mut grad, &mut scratch);
    }
    Ok((loss / n, grad))
}

/// Exact gradient of the batch MSE with respect to every parameter.
pub fn lstm_grad(params: &LstmParams, batch: &[(&Window, f64)]) -> Result<(f64, LstmParams)> {
    if params.input_dim != NUM_FEATURES {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} inputs, window rows have {NUM_FEATURES}",
            params.input_dim
        )));
    }
    let flat: Vec<(&[f64], f64)> = batch
        .iter()
        .map(|(w, y)| (w.rows.as_flattened(), *y))
        .collect();
    grad_sequences(params, &flat)
}

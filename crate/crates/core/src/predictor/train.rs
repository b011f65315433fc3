use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{backward_into, forward_into, Gate, LstmParams, Trace};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::NUM_FEATURES;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub epochs: usize,
    /// Minibatch size; `None` trains full-batch. Minibatches are taken in
    /// sample order, never shuffled.
    pub batch: Option<usize>,
    pub learning_rate: f64,
    pub optimizer: AdamConfig,
    pub seed: u64,
    pub init_scale: f64,
    pub forget_bias_offset: f64,
    /// Global gradient-norm ceiling; `None` disables clipping.
    pub grad_clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_dim: 32,
            epochs: 200,
            batch: None,
            learning_rate: 1e-3,
            optimizer: AdamConfig::default(),
            seed: 0,
            init_scale: 0.08,
            forget_bias_offset: 1.0,
            grad_clip_norm: Some(5.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be at least 1");
        }
        if self.batch == Some(0) {
            return bad("batch must be at least 1");
        }
        if !(self.init_scale >= 0.0) {
            return bad("init_scale must be non-negative");
        }
        if self.grad_clip_norm.is_some_and(|c| !(c > 0.0)) {
            return bad("grad_clip_norm must be positive");
        }
        Ok(())
    }
}

/// Uniform `[-init_scale, init_scale]` draws in coordinate order, then the
/// forget-gate bias offset.
pub fn init_params(input_dim: usize, config: &TrainConfig) -> LstmParams {
    let mut params = LstmParams::zeros(input_dim, config.hidden_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let s = config.init_scale;
    for slice in params.slices_mut() {
        for v in slice.iter_mut() {
            *v = if s > 0.0 { rng.random_range(-s..=s) } else { 0.0 };
        }
    }
    params
        .gate_bias_mut(Gate::Forget)
        .iter_mut()
        .for_each(|b| *b += config.forget_bias_offset);
    params
}

struct Adam {
    cfg: AdamConfig,
    lr: f64,
    step: i32,
    m: LstmParams,
    v: LstmParams,
}

impl Adam {
    fn new(shape: &LstmParams, lr: f64, cfg: AdamConfig) -> Self {
        let zeros = LstmParams::zeros(shape.input_dim, shape.hidden_dim);
        Adam {
            cfg,
            lr,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    fn update(&mut self, params: &mut LstmParams, grad: &mut LstmParams) {
        self.step += 1;
        let AdamConfig {
            beta1,
            beta2,
            epsilon,
        } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.step);
        let c2 = 1.0 - beta2.powi(self.step);
        let slices = params
            .slices_mut()
            .into_iter()
            .zip(grad.slices_mut())
            .zip(self.m.slices_mut().into_iter().zip(self.v.slices_mut()));
        for ((p, g), (m, v)) in slices {
            for k in 0..p.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= self.lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
}

fn clip_global_norm(grad: &mut LstmParams, max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let k = max_norm / norm;
        for slice in grad.slices_mut() {
            slice.iter_mut().for_each(|g| *g *= k);
        }
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainedLstm {
    pub params: LstmParams,
    /// Full-dataset MSE before each epoch, followed by the final MSE.
    pub loss_history: Vec<f64>,
}

impl TrainedLstm {
    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().expect("non-empty history")
    }
}

/// Full-dataset loss under `params`.
pub fn dataset_loss(params: &LstmParams, dataset: &Dataset) -> Result<f64> {
    let mut trace = Trace::default();
    let mut sum = 0.0;
    for s in &dataset.samples {
        let y = forward_into(params, s.window.rows.as_flattened(), &mut trace)?;
        sum += (y - s.label).powi(2);
    }
    Ok(sum / dataset.len() as f64)
}

/// Trains an LSTM on a standardized dataset with Adam on the MSE.
pub fn train_lstm(dataset: &Dataset, config: &TrainConfig) -> Result<TrainedLstm> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput("training dataset"));
    }
    let mut params = init_params(NUM_FEATURES, config);
    let mut adam = Adam::new(&params, config.learning_rate, config.optimizer);
    let mut grad = LstmParams::zeros(NUM_FEATURES, config.hidden_dim);
    let mut trace = Trace::default();
    let mut scratch = Vec::new();
    let batch_size = config.batch.unwrap_or(dataset.len()).min(dataset.len());
    let mut loss_history = Vec::with_capacity(config.epochs + 1);

    let full_batch = batch_size == dataset.len();

    for epoch in 0..config.epochs {
        let before = if full_batch {
            None
        } else {
            Some(dataset_loss(&params, dataset)?)
        };
        let mut epoch_loss = 0.0;
        for chunk in dataset.samples.chunks(batch_size) {
            for slice in grad.slices_mut() {
                slice.iter_mut().for_each(|g| *g = 0.0);
            }
            let n = chunk.len() as f64;
            for s in chunk {
                let inputs = s.window.rows.as_flattened();
                let y = forward_into(&params, inputs, &mut trace)?;
                let err = y - s.label;
                epoch_loss += err * err;
                backward_into(&params, inputs, &trace, 2.0 * err / n, &mut grad, &mut scratch);
            }
            if let Some(max_norm) = config.grad_clip_norm {
                clip_global_norm(&mut grad, max_norm);
            }
            adam.update(&mut params, &mut grad);
        }
        // With full batches the pass loss is exactly the pre-update loss.
        let loss = before.unwrap_or(epoch_loss / dataset.len() as f64);
        if !loss.is_finite() || !params.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        loss_history.push(loss);
    }
    let final_loss = dataset_loss(&params, dataset)?;
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            epoch: config.epochs,
        });
    }
    loss_history.push(final_loss);
    Ok(TrainedLstm {
        params,
        loss_history,
    })
}

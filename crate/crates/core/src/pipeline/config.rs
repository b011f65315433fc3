use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backtest::FilterConfig;
use crate::error::{Error, Result};
use crate::market_data::SyntheticSpec;
use crate::predictor::{AdamConfig, PredictorKind, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// One `<TICKER>.csv` per ticker.
    CsvDir(PathBuf),
    Synthetic(SyntheticSpec),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SyntheticSpec::default())
    }
}

/// Training hyperparameters; the seed comes from the run seed per
/// (ticker, fold).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LstmSettings {
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch: Option<usize>,
    pub learning_rate: f64,
    pub optimizer: AdamConfig,
    pub init_scale: f64,
    pub forget_bias_offset: f64,
    pub grad_clip_norm: Option<f64>,
}

impl Default for LstmSettings {
    fn default() -> Self {
        let d = TrainConfig::default();
        LstmSettings {
            hidden_dim: d.hidden_dim,
            epochs: d.epochs,
            batch: d.batch,
            learning_rate: d.learning_rate,
            optimizer: d.optimizer,
            init_scale: d.init_scale,
            forget_bias_offset: d.forget_bias_offset,
            grad_clip_norm: d.grad_clip_norm,
        }
    }
}

impl LstmSettings {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            hidden_dim: self.hidden_dim,
            epochs: self.epochs,
            batch: self.batch,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer,
            seed,
            init_scale: self.init_scale,
            forget_bias_offset: self.forget_bias_offset,
            grad_clip_norm: self.grad_clip_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data_source: DataSource,
    pub train_size: usize,
    pub horizon: usize,
    pub window_len: usize,
    pub predictor: PredictorKind,
    pub lstm: LstmSettings,
    pub filter: FilterConfig,
    pub equity_initial: f64,
    pub commission_rate: f64,
    pub group_len: usize,
    pub correlation_threshold: f64,
    /// Also run the single-model 40-day horizon experiment.
    pub horizon_decay: bool,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Training worker threads; 0 uses every core.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_source: DataSource::default(),
            train_size: 240,
            horizon: 10,
            window_len: 10,
            predictor: PredictorKind::Lstm,
            lstm: LstmSettings::default(),
            filter: FilterConfig::default(),
            equity_initial: 1_000_000.0,
            commission_rate: 0.0001,
            group_len: 84,
            correlation_threshold: 0.7,
            horizon_decay: true,
            output_dir: PathBuf::from("out"),
            seed: 42,
            workers: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.train_size == 0 || self.horizon == 0 || self.window_len == 0 {
            return bad("train_size, horizon and window_len must be positive");
        }
        if !(self.equity_initial > 0.0) {
            return bad("equity_initial must be positive");
        }
        if !(self.commission_rate >= 0.0) {
            return bad("commission_rate must be non-negative");
        }
        if self.group_len < 2 {
            return bad("group_len must be at least 2");
        }
        if let DataSource::Synthetic(spec) = &self.data_source {
            spec.validate()?;
        }
        self.filter.validate()?;
        self.lstm.train_config(0).validate()
    }
}

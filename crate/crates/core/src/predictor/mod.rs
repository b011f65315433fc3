//! LSTM regressor, trivial baselines, and checkpoints.

mod checkpoint;
pub mod lstm;
mod train;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Scaler, Window};
use crate::error::Result;
use crate::features::MOMENTUM_COLUMN;

pub use checkpoint::{Checkpoint, CHECKPOINT_SCHEMA_VERSION};
pub use lstm::{forward_sequence, grad_sequences, lstm_forward, lstm_grad, mse_loss, Gate, LstmParams, Trace, GATES};
pub use train::{dataset_loss, init_params, train_lstm, AdamConfig, TrainConfig, TrainedLstm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    #[default]
    Lstm,
    Persistence,
    Zero,
}

impl std::str::FromStr for PredictorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "lstm" => Ok(PredictorKind::Lstm),
            "persistence" => Ok(PredictorKind::Persistence),
            "zero" => Ok(PredictorKind::Zero),
            other => Err(format!("unknown predictor `{other}` (lstm|persistence|zero)")),
        }
    }
}

impl std::fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PredictorKind::Lstm => "lstm",
            PredictorKind::Persistence => "persistence",
            PredictorKind::Zero => "zero",
        })
    }
}

/// A fitted predictor. Windows passed to [`PredictorHandle::predict`] must be
/// standardized with the scaler the handle was fitted with; a mismatch
/// cannot be detected here.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictorHandle {
    Lstm { params: LstmParams, scaler: Scaler },
    /// Repeats the window's last observed return momentum.
    Persistence { scaler: Scaler },
    Zero,
}

impl PredictorHandle {
    pub fn kind(&self) -> PredictorKind {
        match self {
            PredictorHandle::Lstm { .. } => PredictorKind::Lstm,
            PredictorHandle::Persistence { .. } => PredictorKind::Persistence,
            PredictorHandle::Zero => PredictorKind::Zero,
        }
    }

    pub fn scaler(&self) -> Option<&Scaler> {
        match self {
            PredictorHandle::Lstm { scaler, .. } | PredictorHandle::Persistence { scaler } => {
                Some(scaler)
            }
            PredictorHandle::Zero => None,
        }
    }

    pub fn predict_one(&self, window: &Window) -> Result<f64> {
        match self {
            PredictorHandle::Lstm { params, .. } => Ok(lstm_forward(params, window)?.0),
            PredictorHandle::Persistence { scaler } => Ok(window
                .last()
                .map(|row| scaler.invert_value(MOMENTUM_COLUMN, row[MOMENTUM_COLUMN]))
                .unwrap_or(0.0)),
            PredictorHandle::Zero => Ok(0.0),
        }
    }

    pub fn predict(&self, windows: &[Window]) -> Result<Vec<f64>> {
        windows.iter().map(|w| self.predict_one(w)).collect()
    }
}

/// Output of [`fit_predictor`]; the loss history is empty for baselines.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub handle: PredictorHandle,
    pub loss_history: Vec<f64>,
}

/// Fits the requested predictor kind on a standardized dataset.
pub fn fit_predictor(kind: PredictorKind, dataset: &Dataset, config: &TrainConfig) -> Result<Fitted> {
    Ok(match kind {
        PredictorKind::Lstm => {
            let trained = train_lstm(dataset, config)?;
            Fitted {
                handle: PredictorHandle::Lstm {
                    params: trained.params,
                    scaler: dataset.scaler.clone(),
                },
                loss_history: trained.loss_history,
            }
        }
        PredictorKind::Persistence => Fitted {
            handle: PredictorHandle::Persistence {
                scaler: dataset.scaler.clone(),
            },
            loss_history: Vec::new(),
        },
        PredictorKind::Zero => Fitted {
            handle: PredictorHandle::Zero,
            loss_history: Vec::new(),
        },
    })
}

use serde::{Deserialize, Serialize};

use super::lstm::{Gate, LstmParams, GATES};
use super::{PredictorHandle, PredictorKind, TrainConfig};
use crate::dataset::Scaler;
use crate::error::{Error, Result};

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// On-disk model: every gate block as its own flat array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub kind: PredictorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lstm: Option<LstmArrays>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<Scaler>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<TrainConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LstmArrays {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_i: Vec<f64>,
    pub w_f: Vec<f64>,
    pub w_o: Vec<f64>,
    pub w_g: Vec<f64>,
    pub u_i: Vec<f64>,
    pub u_f: Vec<f64>,
    pub u_o: Vec<f64>,
    pub u_g: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_g: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

impl LstmArrays {
    fn from_params(p: &LstmParams) -> Self {
        let w = |g: Gate| p.gate_input_weights(g).to_vec();
        let u = |g: Gate| p.gate_recurrent_weights(g).to_vec();
        let b = |g: Gate| p.gate_bias(g).to_vec();
        LstmArrays {
            input_dim: p.input_dim,
            hidden_dim: p.hidden_dim,
            w_i: w(Gate::Input),
            w_f: w(Gate::Forget),
            w_o: w(Gate::Output),
            w_g: w(Gate::Cell),
            u_i: u(Gate::Input),
            u_f: u(Gate::Forget),
            u_o: u(Gate::Output),
            u_g: u(Gate::Cell),
            b_i: b(Gate::Input),
            b_f: b(Gate::Forget),
            b_o: b(Gate::Output),
            b_g: b(Gate::Cell),
            w_out: p.w_out.clone(),
            b_out: p.b_out,
        }
    }

    fn to_params(&self) -> Result<LstmParams> {
        let ws = [&self.w_i, &self.w_f, &self.w_o, &self.w_g];
        let us = [&self.u_i, &self.u_f, &self.u_o, &self.u_g];
        let bs = [&self.b_i, &self.b_f, &self.b_o, &self.b_g];
        let params = LstmParams {
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            w_x: GATES.iter().flat_map(|&g| ws[g as usize].iter().copied()).collect(),
            w_h: GATES.iter().flat_map(|&g| us[g as usize].iter().copied()).collect(),
            bias: GATES.iter().flat_map(|&g| bs[g as usize].iter().copied()).collect(),
            w_out: self.w_out.clone(),
            b_out: self.b_out,
        };
        let h = self.hidden_dim;
        let blocks_ok = ws.iter().all(|w| w.len() == h * self.input_dim)
            && us.iter().all(|u| u.len() == h * h)
            && bs.iter().all(|b| b.len() == h);
        if !blocks_ok {
            return Err(Error::DimensionMismatch("checkpoint gate block sizes".into()));
        }
        params.check()?;
        Ok(params)
    }
}

impl Checkpoint {
    pub fn from_handle(handle: &PredictorHandle, config: Option<&TrainConfig>) -> Self {
        let lstm = match handle {
            PredictorHandle::Lstm { params, .. } => Some(LstmArrays::from_params(params)),
            _ => None,
        };
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            kind: handle.kind(),
            lstm,
            scaler: handle.scaler().cloned(),
            config: config.cloned(),
        }
    }

    pub fn into_handle(self) -> Result<PredictorHandle> {
        if self.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported checkpoint schema {}",
                self.schema_version
            )));
        }
        let missing = |what: &str| Error::InvalidConfig(format!("{} checkpoint lacks {what}", self.kind));
        Ok(match self.kind {
            PredictorKind::Lstm => PredictorHandle::Lstm {
                params: self.lstm.as_ref().ok_or_else(|| missing("weights"))?.to_params()?,
                scaler: self.scaler.clone().ok_or_else(|| missing("scaler"))?,
            },
            PredictorKind::Persistence => PredictorHandle::Persistence {
                scaler: self.scaler.clone().ok_or_else(|| missing("scaler"))?,
            },
            PredictorKind::Zero => PredictorHandle::Zero,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

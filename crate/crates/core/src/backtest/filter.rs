use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// No-trade band and shrinkage constant applied to raw scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub no_trade_band: f64,
    pub shrink_constant: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            no_trade_band: 0.005,
            shrink_constant: 0.005,
        }
    }
}

impl FilterConfig {
    /// Passes every score through unchanged.
    pub fn unfiltered() -> Self {
        FilterConfig {
            no_trade_band: 0.0,
            shrink_constant: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (band, c) = (self.no_trade_band, self.shrink_constant);
        if !(band >= 0.0 && c >= 0.0 && band.is_finite() && c.is_finite()) {
            return Err(Error::InvalidConfig(
                "no_trade_band and shrink_constant must be finite and non-negative".into(),
            ));
        }
        if band < c {
            return Err(Error::InvalidConfig(format!(
                "no_trade_band {band} must be at least shrink_constant {c}"
            )));
        }
        Ok(())
    }
}

/// Zero inside `[-band, band]`, otherwise pulled toward zero by `c`.
pub fn filter_and_shrink(score: f64, cfg: &FilterConfig) -> f64 {
    if score.abs() <= cfg.no_trade_band {
        0.0
    } else if score > 0.0 {
        score - cfg.shrink_constant
    } else {
        score + cfg.shrink_constant
    }
}

/// Signed weights `s_i / Σ|s_j|` times equity. Zero scores get no position;
/// an all-zero day returns an empty book.
pub fn allocate_positions(adjusted_scores: &BTreeMap<String, f64>, equity: f64) -> BTreeMap<String, f64> {
    let gross: f64 = adjusted_scores.values().map(|s| s.abs()).sum();
    if gross == 0.0 {
        return BTreeMap::new();
    }
    adjusted_scores
        .iter()
        .filter(|(_, &s)| s != 0.0)
        .map(|(t, &s)| (t.clone(), equity * (s / gross)))
        .collect()
}

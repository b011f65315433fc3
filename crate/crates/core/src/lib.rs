//! Walk-forward return-momentum forecasting and long/short backtesting.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! 1. [`market_data`] ingests OHLCV CSVs (or generates a seeded AR(2)
//!    universe) and aligns tickers on a common calendar.
//! 2. [`features`] derives six price/volume features per trading day.
//! 3. [`dataset`] cuts 10-day windows labelled with next-day return
//!    momentum, standardizes them with train-only statistics, and lays out
//!    the walk-forward folds (train 240, predict 10, retrain).
//! 4. [`predictor`] trains a small LSTM by backpropagation through time,
//!    with persistence and zero baselines.
//! 5. [`backtest`] turns scores into daily positions through a no-trade
//!    band and constant shrinkage, then simulates equity with turnover
//!    commission.
//! 6. [`analysis`] correlates predictions with realized labels by period
//!    group, by label dispersion, and by forecast horizon.
//!
//! [`pipeline`] wires everything behind a single JSON config; the
//! `momentum-lab` binary exposes it as `generate`, `run` and `report`.

pub mod analysis;
pub mod backtest;
pub mod chart;
pub mod dataset;
pub mod error;
pub mod features;
pub mod market_data;
pub mod pipeline;
pub mod predictor;
pub mod seed;

pub use error::{Error, Result};

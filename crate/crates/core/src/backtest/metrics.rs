use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::engine::BacktestRun;
use crate::error::{Error, Result};

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Summary of one backtest. Ratios are fractions, not percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub market_days: usize,
    pub in_market_days_ratio: f64,
    pub position_qualified_ratio: f64,
    pub commission_rate: f64,
    pub equity_initial: f64,
    pub equity_final: f64,
    pub total_return: f64,
    pub annual_return: f64,
    /// Winning trade episodes over all episodes; `None` without trades.
    pub win_rate: Option<f64>,
    /// Winning position-days over all nonzero position-days.
    pub win_rate_position_days: Option<f64>,
    pub max_drawdown: f64,
    pub trade_count: usize,
}

pub fn total_return(equity_initial: f64, equity_final: f64) -> f64 {
    equity_final / equity_initial - 1.0
}

/// Geometric annualization over a 252-day year.
pub fn annual_return(total_return: f64, market_days: usize) -> f64 {
    (1.0 + total_return).powf(TRADING_DAYS_PER_YEAR / market_days as f64) - 1.0
}

/// Largest peak-to-trough decline as a fraction of the running peak.
pub fn max_drawdown(equity: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &e in equity {
        peak = peak.max(e);
        worst = worst.max((peak - e) / peak);
    }
    worst
}

fn ratio(part: usize, whole: usize) -> f64 {
    part as f64 / whole as f64
}

pub fn compute_metrics(run: &BacktestRun, universe_size: usize) -> Result<BacktestReport> {
    if universe_size == 0 {
        return Err(Error::InvalidConfig("universe_size must be positive".into()));
    }
    let market_days = run.books.len();
    if market_days == 0 {
        return Err(Error::EmptyInput("equity curve"));
    }
    let curve = &run.curve;
    let in_market = run.books.iter().filter(|b| !b.is_flat()).count();
    let positions: usize = run.books.iter().map(|b| b.positions.len()).sum();
    let wins = run.trades.iter().filter(|t| t.win).count();
    let total = total_return(curve.initial(), curve.last());

    Ok(BacktestReport {
        start_date: curve.dates[0],
        end_date: *curve.dates.last().expect("non-empty"),
        market_days,
        in_market_days_ratio: ratio(in_market, market_days),
        position_qualified_ratio: ratio(positions, universe_size * market_days),
        commission_rate: run.commission_rate,
        equity_initial: curve.initial(),
        equity_final: curve.last(),
        total_return: total,
        annual_return: annual_return(total, market_days),
        win_rate: (!run.trades.is_empty()).then(|| ratio(wins, run.trades.len())),
        win_rate_position_days: (run.position_days > 0)
            .then(|| ratio(run.winning_position_days, run.position_days)),
        max_drawdown: max_drawdown(&curve.equity),
        trade_count: run.trades.len(),
    })
}

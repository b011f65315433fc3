//! Score filtration, capital allocation, daily P&L simulation and summary
//! metrics.

mod engine;
mod filter;
mod metrics;

pub use engine::{
    run_backtest, step_day, trades_to_csv, BacktestRun, EquityCurve, PositionBook, ScoredDay,
    StepOutcome, TickerStep, TradeEpisode,
};
pub use filter::{allocate_positions, filter_and_shrink, FilterConfig};
pub use metrics::{
    annual_return, compute_metrics, max_drawdown, total_return, BacktestReport,
    TRADING_DAYS_PER_YEAR,
};

//! Sweeps the no-trade band and shrinkage on one set of predictions and
//! prints the resulting strategy metrics. Uses the persistence predictor so
//! it runs in seconds; pass `lstm` to use the trained model instead.
//!
//! ```text
//! cargo run --release --example backtest_filtration -- [persistence|lstm]
//! ```

use momentum_lab::backtest::{compute_metrics, run_backtest, FilterConfig};
use momentum_lab::pipeline::{run_pipeline, scored_days, RunConfig};
use momentum_lab::predictor::PredictorKind;

fn main() -> momentum_lab::Result<()> {
    let predictor: PredictorKind = std::env::args()
        .nth(1)
        .map(|a| a.parse().expect("lstm, persistence or zero"))
        .unwrap_or(PredictorKind::Persistence);
    let config = RunConfig { predictor, horizon_decay: false, ..RunConfig::default() };
    let output = run_pipeline(&config)?;
    let days = scored_days(&output.frames, &output.folds, |_, row| Some(row.1));
    let universe_size = output.frames.len();

    println!("{predictor} scores over {} days", days.len());
    println!("{:>8} {:>8} {:>12} {:>10} {:>10} {:>8}", "band", "shrink", "total %", "in mkt %", "max dd %", "trades");
    for band in [0.0, 0.0025, 0.005, 0.01, 0.02] {
        for shrink in [0.0, band] {
            if shrink == 0.0 && band > 0.0 && band != 0.005 {
                continue;
            }
            let cfg = FilterConfig { no_trade_band: band, shrink_constant: shrink };
            let run = run_backtest(&days, &cfg, config.equity_initial, config.commission_rate)?;
            let r = compute_metrics(&run, universe_size)?;
            println!(
                "{band:>8} {shrink:>8} {:>12.4} {:>10.2} {:>10.2} {:>8}",
                r.total_return * 100.0,
                r.in_market_days_ratio * 100.0,
                r.max_drawdown * 100.0,
                r.trade_count
            );
        }
    }
    Ok(())
}

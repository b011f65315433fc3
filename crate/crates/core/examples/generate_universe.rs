//! Generates the reference synthetic universe, writes one CSV per ticker and
//! prints the sample lag-1 autocorrelation of each ticker's returns.
//!
//! ```text
//! cargo run --release --example generate_universe -- [out_dir]
//! ```

use std::path::PathBuf;

use momentum_lab::analysis::pearson_correlation;
use momentum_lab::features::compute_returns;
use momentum_lab::Error;
use momentum_lab::market_data::{generate_synthetic_universe, write_csv_bars, SyntheticSpec};

fn main() -> momentum_lab::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "out/data".into());
    let spec = SyntheticSpec::default();
    let synthetic = generate_synthetic_universe(&spec)?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    println!("{} tickers x {} days, seed {}, clamp events {}", spec.n_tickers, spec.n_days, spec.seed, synthetic.clamp_events);
    for series in synthetic.universe.series.values() {
        let path = out.join(format!("{}.csv", series.ticker));
        std::fs::write(&path, write_csv_bars(series)).map_err(|e| Error::io(&path, e))?;
        let r: Vec<f64> = compute_returns(series).into_iter().flatten().collect();
        let rho = pearson_correlation(&r[1..], &r[..r.len() - 1])?.unwrap_or(f64::NAN);
        println!("{}  lag-1 autocorrelation {rho:+.3} (process value {:+.3})", path.display(), spec.phi1 / (1.0 - spec.phi2));
    }
    Ok(())
}


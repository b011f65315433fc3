//! Trains one model per ticker just before the lag-1 coefficient starts to
//! drift, then compares correlation over the first and last 20 predictions.
//!
//! ```text
//! cargo run --release --example horizon_decay -- [first_seed] [n_seeds]
//! ```

use momentum_lab::analysis::{horizon_decay_experiment, DriftScenario, HorizonDecayConfig, DRIFT_SEEDS};

fn main() -> momentum_lab::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let seeds: Vec<u64> = match args.as_slice() {
        [first, n, ..] => (*first..first + n).collect(),
        _ => DRIFT_SEEDS.to_vec(),
    };
    let scenario = DriftScenario::default();
    let cfg = HorizonDecayConfig::default();
    let mut wins = 0;
    for &seed in &seeds {
        let universe = scenario.universe(seed)?;
        let decay = horizon_decay_experiment(&universe, &cfg)?;
        let (a, b) = (decay.corr_first20.unwrap_or(f64::NAN), decay.corr_last20.unwrap_or(f64::NAN));
        if a >= b {
            wins += 1;
        }
        println!("seed {seed:>3}: first 20 {a:.4}  last 20 {b:.4}");
    }
    println!("first >= last in {wins} of {} seeds", seeds.len());
    Ok(())
}

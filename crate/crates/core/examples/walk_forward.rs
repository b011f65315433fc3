//! Walk-forward training on one synthetic ticker: retrain on the latest 240
//! samples every 10 days and report each fold's fit and out-of-sample
//! correlation.
//!
//! ```text
//! cargo run --release --example walk_forward -- [max_folds]
//! ```

use momentum_lab::analysis::pearson_correlation;
use momentum_lab::dataset::{apply_scaler, build_samples, make_walk_forward_schedule, Dataset};
use momentum_lab::features::build_aligned_frame;
use momentum_lab::market_data::{generate_synthetic_universe, SyntheticSpec};
use momentum_lab::predictor::{fit_predictor, PredictorKind, TrainConfig};
use momentum_lab::seed::derive_seed;

fn main() -> momentum_lab::Result<()> {
    let max_folds: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(usize::MAX);
    let universe = generate_synthetic_universe(&SyntheticSpec::default())?.universe;
    let ticker = universe.tickers().next().expect("non-empty").to_string();
    let frame = build_aligned_frame(&universe, &ticker).expect("ticker present");
    let samples = build_samples(&frame, frame.momentum(), 10);
    let schedule = make_walk_forward_schedule(samples.len(), 240, 10)?;
    println!("{ticker}: {} samples, {} folds", samples.len(), schedule.folds.len());

    let (mut preds, mut labels) = (Vec::new(), Vec::new());
    for (k, fold) in schedule.folds.iter().enumerate().take(max_folds) {
        let dataset = Dataset::fit(&samples[fold.train.clone()])?;
        let config = TrainConfig { seed: derive_seed(42, 0, k as u64), ..TrainConfig::default() };
        let fitted = fit_predictor(PredictorKind::Lstm, &dataset, &config)?;
        let test = &samples[fold.predict.clone()];
        let windows: Vec<_> = test.iter().map(|s| apply_scaler(s, &dataset.scaler).window).collect();
        let p = fitted.handle.predict(&windows)?;
        let history = &fitted.loss_history;
        println!(
            "fold {k:>2}: train {:>3}..{:<3} predict {:>3}..{:<3} loss {:.3e} -> {:.3e}",
            fold.train.start, fold.train.end, fold.predict.start, fold.predict.end, history[0], history[history.len() - 1]
        );
        preds.extend(p);
        labels.extend(test.iter().map(|s| s.label));
    }
    let corr = pearson_correlation(&preds, &labels)?;
    println!("pooled out-of-sample correlation: {corr:?}");
    Ok(())
}

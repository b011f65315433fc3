//! Trains the same walk-forward model on two targets, next-day return and
//! next-day return momentum, and compares them under several correlation
//! measures. Converting one target into the other uses the last observed
//! return, which is known when the prediction is made.
//!
//! ```text
//! cargo run --release --example label_representation -- [epochs]
//! ```

use momentum_lab::analysis::{differenced_correlation, pearson_correlation};
use momentum_lab::dataset::{apply_scaler, build_samples, make_walk_forward_schedule, Dataset};
use momentum_lab::features::{build_aligned_frame, FeatureFrame};
use momentum_lab::market_data::{generate_synthetic_universe, SyntheticSpec};
use momentum_lab::predictor::{fit_predictor, PredictorKind, TrainConfig};
use momentum_lab::seed::derive_seed;

/// `(end_index, prediction, label)` over every walk-forward fold.
fn walk_forward(frame: &FeatureFrame, labels: &[Option<f64>], config: &TrainConfig) -> momentum_lab::Result<Vec<(usize, f64, f64)>> {
    let samples = build_samples(frame, labels, 10);
    let schedule = make_walk_forward_schedule(samples.len(), 240, 10)?;
    let mut out = Vec::new();
    for (k, fold) in schedule.folds.iter().enumerate() {
        let dataset = Dataset::fit(&samples[fold.train.clone()])?;
        let cfg = TrainConfig { seed: derive_seed(config.seed, 0, k as u64), ..config.clone() };
        let fitted = fit_predictor(PredictorKind::Lstm, &dataset, &cfg)?;
        for s in &samples[fold.predict.clone()] {
            let p = fitted.handle.predict_one(&apply_scaler(s, &dataset.scaler).window)?;
            out.push((s.end_index, p, s.label));
        }
    }
    Ok(out)
}

fn show(name: &str, value: Option<f64>) {
    match value {
        Some(v) => println!("  {name:<52} {v:+.4}"),
        None => println!("  {name:<52} undefined"),
    }
}

fn main() -> momentum_lab::Result<()> {
    let epochs: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let config = TrainConfig { epochs, seed: 42, ..TrainConfig::default() };
    let universe = generate_synthetic_universe(&SyntheticSpec::default())?.universe;

    let (mut ret_model, mut mom_model) = (Vec::new(), Vec::new());
    for ticker in universe.tickers() {
        let frame = build_aligned_frame(&universe, ticker).expect("ticker present");
        let r = frame.returns().clone();
        for (t, p, label) in walk_forward(&frame, &r, &config)? {
            ret_model.push((p, label, r[t].expect("defined inside a window")));
        }
        for (t, p, label) in walk_forward(&frame, frame.momentum(), &config)? {
            mom_model.push((p, label, r[t].expect("defined inside a window")));
        }
    }
    let col = |v: &[(f64, f64, f64)], f: fn(&(f64, f64, f64)) -> f64| v.iter().map(f).collect::<Vec<f64>>();

    println!("model trained on next-day returns ({} predictions):", ret_model.len());
    let (p, y, last) = (col(&ret_model, |x| x.0), col(&ret_model, |x| x.1), col(&ret_model, |x| x.2));
    show("corr(predicted return, return)", pearson_correlation(&p, &y)?);
    show("corr(day-over-day change of prediction, of return)", differenced_correlation(&p, &y)?);
    let implied: Vec<f64> = p.iter().zip(&last).map(|(p, r)| p - r).collect();
    let momentum: Vec<f64> = y.iter().zip(&last).map(|(y, r)| y - r).collect();
    show("corr(prediction - last return, return momentum)", pearson_correlation(&implied, &momentum)?);

    println!("model trained on next-day return momentum ({} predictions):", mom_model.len());
    let (p, y, last) = (col(&mom_model, |x| x.0), col(&mom_model, |x| x.1), col(&mom_model, |x| x.2));
    show("corr(predicted momentum, momentum)", pearson_correlation(&p, &y)?);
    show("corr(day-over-day change of prediction, of momentum)", differenced_correlation(&p, &y)?);
    let as_return: Vec<f64> = p.iter().zip(&last).map(|(p, r)| p + r).collect();
    let realized: Vec<f64> = y.iter().zip(&last).map(|(y, r)| y + r).collect();
    show("corr(prediction + last return, return)", pearson_correlation(&as_return, &realized)?);
    Ok(())
}

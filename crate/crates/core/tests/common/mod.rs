//! Oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use momentum_lab::backtest::ScoredDay;
use momentum_lab::dataset::{build_samples, Window};
use momentum_lab::features::{build_feature_frame, NUM_FEATURES, WARM_UP};
use momentum_lab::market_data::{Bar, PriceSeries};
use momentum_lab::predictor::{init_params, lstm_forward, lstm_grad, LstmParams, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const FD_STEP: f64 = 1e-5;

/// Random params (wider than the training init), windows and labels.
pub fn random_problem(seed: u64, hidden_dim: usize, batch: usize) -> (LstmParams, Vec<(Window, f64)>) {
    let config = TrainConfig { hidden_dim, seed, init_scale: 0.5, ..TrainConfig::default() };
    let params = init_params(NUM_FEATURES, &config);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let batch = (0..batch)
        .map(|_| {
            let rows = (0..10).map(|_| std::array::from_fn(|_| normal())).collect();
            (Window { rows }, normal())
        })
        .collect();
    (params, batch)
}

pub fn batch_mse(params: &LstmParams, batch: &[(Window, f64)]) -> f64 {
    batch
        .iter()
        .map(|(w, y)| (lstm_forward(params, w).unwrap().0 - y).powi(2))
        .sum::<f64>()
        / batch.len() as f64
}

/// Largest per-coordinate relative error between the analytic gradient and
/// central differences, with denominator `max(|a|, |n|, 1e-8)`.
pub fn gradient_check(seed: u64, hidden_dim: usize, batch: usize) -> (f64, usize) {
    let (params, data) = random_problem(seed, hidden_dim, batch);
    let refs: Vec<(&Window, f64)> = data.iter().map(|(w, y)| (w, *y)).collect();
    let (_, grad) = lstm_grad(&params, &refs).unwrap();
    let analytic: Vec<f64> = grad.iter().collect();
    let mut worst = 0.0f64;
    for (k, &a) in analytic.iter().enumerate() {
        let mut plus = params.clone();
        *plus.coord_mut(k) += FD_STEP;
        let mut minus = params.clone();
        *minus.coord_mut(k) -= FD_STEP;
        let n = (batch_mse(&plus, &data) - batch_mse(&minus, &data)) / (2.0 * FD_STEP);
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    (worst, analytic.len())
}

// Feature oracle: each feature re-evaluated from its definition.

pub fn price_series(closes: &[f64], volumes: &[u64]) -> PriceSeries {
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let bars = closes
        .iter()
        .zip(volumes)
        .enumerate()
        .map(|(i, (&c, &v))| Bar {
            date: start + Days::new(i as u64),
            open: c,
            high: c,
            low: c,
            close: c,
            volume: v,
        })
        .collect();
    PriceSeries::new("X", bars).unwrap()
}

fn ret(c: &[f64], i: usize) -> Option<f64> {
    (i >= 1).then(|| c[i] / c[i - 1] - 1.0)
}

fn momentum(c: &[f64], i: usize) -> Option<f64> {
    Some(ret(c, i)? - ret(c, i.checked_sub(1)?)?)
}

fn acceleration(c: &[f64], i: usize) -> Option<f64> {
    Some(momentum(c, i)? - momentum(c, i.checked_sub(1)?)?)
}

fn lagged(c: &[f64], i: usize, lag: usize) -> Option<f64> {
    (i >= lag).then(|| c[i] / c[i - lag] - 1.0)
}

fn velocity(v: &[u64], i: usize) -> Option<f64> {
    (i >= 1 && v[i - 1] > 0).then(|| v[i] as f64 / v[i - 1] as f64 - 1.0)
}

fn oracle_row(c: &[f64], v: &[u64], i: usize) -> [Option<f64>; NUM_FEATURES] {
    [ret(c, i), momentum(c, i), acceleration(c, i), lagged(c, i, 5), lagged(c, i, 20), velocity(v, i)]
}

pub fn check_features(closes: &[f64], volumes: &[u64], label: &str) {
    let s = price_series(closes, volumes);
    let frame = build_feature_frame(&s);
    assert_eq!(frame.len(), closes.len());
    for i in 0..closes.len() {
        let expected = oracle_row(closes, volumes, i);
        for (k, want) in expected.iter().enumerate() {
            let got = frame.columns[k][i];
            assert_eq!(got.map(f64::to_bits), want.map(f64::to_bits), "{label}: column {k} row {i}");
        }
        let all = expected.iter().all(Option::is_some);
        assert_eq!(frame.rows[i].is_some(), all, "{label}: row {i}");
    }

    let zero_volume = volumes[..volumes.len().saturating_sub(1)].contains(&0);
    if !zero_volume {
        let first = (closes.len() > WARM_UP).then_some(WARM_UP);
        assert_eq!(frame.first_defined_index, first, "{label}");
        let samples = build_samples(&frame, frame.momentum(), 10);
        assert_eq!(samples.len(), closes.len().saturating_sub(30), "{label}");
    }
}

// Backtest oracles.

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

pub fn golden_days() -> Vec<ScoredDay> {
    let text = include_str!("../fixtures/golden_scores.csv");
    let mut days: Vec<ScoredDay> = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let date: NaiveDate = f[0].parse().unwrap();
        let hold: NaiveDate = f[1].parse().unwrap();
        if days.last().map(|d| d.date) != Some(date) {
            days.push(ScoredDay { date, hold_date: hold, scores: BTreeMap::new(), realized: BTreeMap::new() });
        }
        let day = days.last_mut().unwrap();
        day.scores.insert(f[2].to_string(), f[3].parse().unwrap());
        day.realized.insert(f[2].to_string(), f[4].parse().unwrap());
    }
    days
}

pub fn golden_equity() -> Vec<(NaiveDate, f64)> {
    include_str!("../fixtures/golden_equity.csv")
        .lines()
        .skip(1)
        .map(|l| {
            let (d, e) = l.split_once(',').unwrap();
            (d.parse().unwrap(), e.parse().unwrap())
        })
        .collect()
}

pub fn drawdown_by_enumeration(equity: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..equity.len() {
        for j in i..equity.len() {
            worst = worst.max((equity[i] - equity[j]) / equity[i]);
        }
    }
    worst
}

//! Supervised samples, train-only standardization and walk-forward folds.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureFrame, NUM_FEATURES};

pub const DEFAULT_WINDOW_LEN: usize = 10;
pub const DEFAULT_TRAIN_SIZE: usize = 240;
pub const DEFAULT_HORIZON: usize = 10;

/// A run of consecutive feature rows, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub rows: Vec<[f64; NUM_FEATURES]>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&[f64; NUM_FEATURES]> {
        self.rows.last()
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[col])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub ticker: String,
    /// Frame index of the window's last day.
    pub end_index: usize,
    pub window: Window,
    /// The label observed on day `end_index + 1`.
    pub label: f64,
}

/// Emits one sample per day `t` where rows `t-window_len+1..=t` are defined
/// and `labels[t+1]` is defined. Pass the momentum sequence for the standard
/// next-day return-momentum target.
pub fn build_samples(frame: &FeatureFrame, labels: &[Option<f64>], window_len: usize) -> Vec<Sample> {
    let n = frame.rows.len().min(labels.len());
    if window_len == 0 || n < window_len + 1 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for t in (window_len - 1)..(n - 1) {
        let Some(label) = labels[t + 1] else { continue };
        let rows: Option<Vec<_>> = frame.rows[t + 1 - window_len..=t]
            .iter()
            .map(|r| r.map(|v| v.to_array()))
            .collect();
        let Some(rows) = rows else { continue };
        if !label.is_finite() || rows.iter().flatten().any(|v| !v.is_finite()) {
            continue;
        }
        out.push(Sample {
            ticker: frame.ticker.clone(),
            end_index: t,
            window: Window { rows },
            label,
        });
    }
    out
}

/// Per-feature location and scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: [f64; NUM_FEATURES],
    pub scale: [f64; NUM_FEATURES],
    /// Columns with zero variance; their scale is pinned to 1.
    pub degenerate: [bool; NUM_FEATURES],
}

impl Scaler {
    pub fn identity() -> Self {
        Scaler {
            mean: [0.0; NUM_FEATURES],
            scale: [1.0; NUM_FEATURES],
            degenerate: [false; NUM_FEATURES],
        }
    }

    pub fn apply_window(&self, window: &Window) -> Window {
        Window {
            rows: window
                .rows
                .iter()
                .map(|row| std::array::from_fn(|f| (row[f] - self.mean[f]) / self.scale[f]))
                .collect(),
        }
    }

    pub fn invert_window(&self, window: &Window) -> Window {
        Window {
            rows: window
                .rows
                .iter()
                .map(|row| std::array::from_fn(|f| row[f] * self.scale[f] + self.mean[f]))
                .collect(),
        }
    }

    pub fn invert_value(&self, column: usize, z: f64) -> f64 {
        z * self.scale[column] + self.mean[column]
    }
}

/// Fits mean and population standard deviation over every window cell.
pub fn fit_scaler(train_samples: &[Sample]) -> Result<Scaler> {
    let cells = train_samples.iter().flat_map(|s| s.window.rows.iter());
    let count = cells.clone().count();
    if count == 0 {
        return Err(Error::EmptyInput("training samples"));
    }
    let n = count as f64;
    let mut mean = [0.0; NUM_FEATURES];
    for row in cells.clone() {
        for f in 0..NUM_FEATURES {
            mean[f] += row[f];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut var = [0.0; NUM_FEATURES];
    for row in cells {
        for f in 0..NUM_FEATURES {
            var[f] += (row[f] - mean[f]).powi(2);
        }
    }
    let mut scale = [1.0; NUM_FEATURES];
    let mut degenerate = [false; NUM_FEATURES];
    for f in 0..NUM_FEATURES {
        let sd = (var[f] / n).sqrt();
        // Constant columns can leave a few ulps of variance behind.
        if sd <= 1e-12 * mean[f].abs() || sd == 0.0 {
            degenerate[f] = true;
        } else {
            scale[f] = sd;
        }
    }
    Ok(Scaler {
        mean,
        scale,
        degenerate,
    })
}

/// Standardizes the window; the label stays in raw units.
pub fn apply_scaler(sample: &Sample, scaler: &Scaler) -> Sample {
    Sample {
        window: scaler.apply_window(&sample.window),
        ..sample.clone()
    }
}

/// A standardized training set with the scaler fitted on it.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub scaler: Scaler,
}

impl Dataset {
    pub fn fit(raw_train: &[Sample]) -> Result<Self> {
        let scaler = fit_scaler(raw_train)?;
        let samples = raw_train.iter().map(|s| apply_scaler(s, &scaler)).collect();
        Ok(Dataset { samples, scaler })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

/// One retraining step. Ranges index the ticker's sample list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Range<usize>,
    pub predict: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkForwardSchedule {
    pub folds: Vec<Fold>,
}

/// Splits sample positions `train_size..n_usable` into consecutive predict
/// blocks of `horizon`; each fold trains on the `train_size` samples right
/// before its block. The final block may be short.
pub fn make_walk_forward_schedule(
    n_usable: usize,
    train_size: usize,
    horizon: usize,
) -> Result<WalkForwardSchedule> {
    if train_size == 0 || horizon == 0 {
        return Err(Error::InvalidConfig(
            "train_size and horizon must be positive".into(),
        ));
    }
    if n_usable <= train_size {
        return Err(Error::InsufficientHistory {
            needed: train_size + 1,
            available: n_usable,
        });
    }
    let folds = (train_size..n_usable)
        .step_by(horizon)
        .map(|start| Fold {
            train: start - train_size..start,
            predict: start..(start + horizon).min(n_usable),
        })
        .collect();
    Ok(WalkForwardSchedule { folds })
}

/// Audit record for one fold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldDump {
    pub ticker: String,
    pub fold: usize,
    pub train_end_indices: Vec<usize>,
    pub predict_end_indices: Vec<usize>,
    pub scaler: Scaler,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::build_feature_frame;
    use crate::market_data::{Bar, PriceSeries};
    use chrono::NaiveDate;

    fn wiggly(n: usize) -> FeatureFrame {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let bars = (0..n)
            .map(|i| {
                let c = 100.0 + (i as f64 * 0.7).sin() * 3.0 + i as f64 * 0.1;
                Bar {
                    date: start + chrono::Days::new(i as u64),
                    open: c,
                    high: c,
                    low: c,
                    close: c,
                    volume: 1000 + (i as u64 * 37) % 200,
                }
            })
            .collect();
        build_feature_frame(&PriceSeries::new("W", bars).unwrap())
    }

    fn samples(n: usize) -> Vec<Sample> {
        let f = wiggly(n);
        build_samples(&f, &f.momentum().clone(), DEFAULT_WINDOW_LEN)
    }

    fn one_column_sample(values: &[f64]) -> Sample {
        Sample {
            ticker: "X".into(),
            end_index: 0,
            window: Window {
                rows: values
                    .iter()
                    .map(|&v| {
                        let mut r = [0.0; NUM_FEATURES];
                        r[0] = v;
                        r
                    })
                    .collect(),
            },
            label: 0.0,
        }
    }

    #[test]
    fn sample_counts() {
        let s = samples(31);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].end_index, 29);
        assert!(samples(30).is_empty());
        let s = samples(50);
        assert_eq!(s.len(), 20);
        assert_eq!(s.first().unwrap().end_index, 29);
        assert_eq!(s.last().unwrap().end_index, 48);
    }

    #[test]
    fn label_is_next_day_momentum() {
        let f = wiggly(60);
        let s = build_samples(&f, f.momentum(), 10);
        for sample in &s {
            assert_eq!(sample.label, f.momentum()[sample.end_index + 1].unwrap());
            assert_eq!(sample.window.rows[9], f.rows[sample.end_index].unwrap().to_array());
            assert_eq!(sample.window.len(), 10);
        }
    }

    #[test]
    fn scaler_examples() {
        let zeros = fit_scaler(&[one_column_sample(&[0.0; 4])]).unwrap();
        assert_eq!(zeros.mean, [0.0; NUM_FEATURES]);
        assert_eq!(zeros.scale, [1.0; NUM_FEATURES]);
        assert!(zeros.degenerate.iter().all(|&d| d));

        let sym = fit_scaler(&[one_column_sample(&[-1.0, 1.0])]).unwrap();
        assert_eq!((sym.mean[0], sym.scale[0]), (0.0, 1.0));
        assert!(!sym.degenerate[0]);

        let s = fit_scaler(&[one_column_sample(&[1.0, 2.0]), one_column_sample(&[3.0, 4.0])]).unwrap();
        assert_eq!(s.mean[0], 2.5);
        assert!((s.scale[0] - 1.25f64.sqrt()).abs() < 1e-15);
        assert!((s.scale[0] - 1.118034).abs() < 1e-6);

        assert!(matches!(fit_scaler(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn apply_scaler_arithmetic() {
        let sample = one_column_sample(&[3.0]);
        let mut scaler = Scaler::identity();
        assert_eq!(apply_scaler(&sample, &scaler), sample);
        scaler.mean[0] = 1.0;
        scaler.scale[0] = 2.0;
        let out = apply_scaler(&sample, &scaler);
        assert_eq!(out.window.rows[0][0], 1.0);
        assert_eq!(out.label, sample.label);
    }

    #[test]
    fn standardization_fixed_point() {
        let data = Dataset::fit(&samples(120)).unwrap();
        let refit = fit_scaler(&data.samples).unwrap();
        for f in 0..NUM_FEATURES {
            assert!(!refit.degenerate[f]);
            assert!(refit.mean[f].abs() < 1e-12);
            assert!((refit.scale[f] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scaler_round_trip() {
        let raw = samples(80);
        let scaler = fit_scaler(&raw).unwrap();
        for s in &raw {
            let back = scaler.invert_window(&scaler.apply_window(&s.window));
            for (a, b) in back.rows.iter().flatten().zip(s.window.rows.iter().flatten()) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn schedule_examples() {
        let s = make_walk_forward_schedule(480, 240, 10).unwrap();
        assert_eq!(s.folds.len(), 24);
        assert_eq!(s.folds[0], Fold { train: 0..240, predict: 240..250 });
        assert_eq!(s.folds[23].predict, 470..480);

        assert_eq!(make_walk_forward_schedule(250, 240, 10).unwrap().folds.len(), 1);
        assert_eq!(make_walk_forward_schedule(270, 240, 10).unwrap().folds.len(), 3);

        let short = make_walk_forward_schedule(255, 240, 10).unwrap();
        assert_eq!(short.folds.last().unwrap().predict, 250..255);

        assert!(matches!(
            make_walk_forward_schedule(240, 240, 10),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn schedule_has_no_lookahead_and_partitions() {
        let all = samples(600);
        let s = make_walk_forward_schedule(all.len(), 240, 10).unwrap();
        let mut next = 240;
        for fold in &s.folds {
            assert_eq!(fold.predict.start, next);
            next = fold.predict.end;
            assert_eq!(fold.train.len(), 240);
            let last_train = all[fold.train.end - 1].end_index;
            let first_pred = all[fold.predict.start].end_index;
            assert!(last_train + 1 <= first_pred);
        }
        assert_eq!(next, all.len());
    }

    #[test]
    fn scaler_ignores_post_fold_data() {
        let all = samples(400);
        let fold = &make_walk_forward_schedule(all.len(), 240, 10).unwrap().folds[0];
        let before = fit_scaler(&all[fold.train.clone()]).unwrap();
        let mut perturbed = all.clone();
        for s in &mut perturbed[fold.predict.start..] {
            for row in &mut s.window.rows {
                row.iter_mut().for_each(|v| *v *= 7.0);
            }
            s.label += 1.0;
        }
        let after = fit_scaler(&perturbed[fold.train.clone()]).unwrap();
        assert_eq!(before, after);
    }
}

//! Prediction/label correlation studies: per-group correlation, the
//! high-correlation subset, label dispersion against correlation, and the
//! decay of correlation with forecast horizon.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{apply_scaler, build_samples, Dataset};
use crate::error::{Error, Result};
use crate::features::build_aligned_frame;
use crate::market_data::{generate_with_regime, ArRegime, SyntheticSpec, Universe};
use crate::predictor::{fit_predictor, PredictorKind, TrainConfig};
use crate::seed::derive_seed;

/// Four months of trading days.
pub const DEFAULT_GROUP_LEN: usize = 84;
/// A trailing partial group shorter than this is dropped.
pub const MIN_GROUP_DAYS: usize = 20;
pub const DEFAULT_THRESHOLD: f64 = 0.7;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn population_std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Pearson product-moment coefficient; `None` if either side is constant.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            available: x.len(),
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

/// Average ranks (1-based), ties sharing the mean rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn spearman_correlation(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    pearson_correlation(&ranks(x), &ranks(y))
}

/// Correlation of first differences, `corr(Δpred, Δlabel)`.
pub fn differenced_correlation(predictions: &[f64], labels: &[f64]) -> Result<Option<f64>> {
    let diff = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
    pearson_correlation(&diff(predictions), &diff(labels))
}

/// Out-of-sample predictions aligned with realized labels for one ticker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSeries {
    pub ticker: String,
    /// Date of each label (the day after the window ends).
    pub dates: Vec<NaiveDate>,
    pub predictions: Vec<f64>,
    pub labels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub ticker: String,
    pub group_index: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub days: usize,
    /// `None` when either side is constant within the group.
    pub correlation: Option<f64>,
    pub label_std: f64,
}

/// Splits each ticker's series into consecutive blocks of `group_len`.
pub fn group_correlations(series: &[PredictionSeries], group_len: usize) -> Result<Vec<GroupStats>> {
    if group_len < 2 {
        return Err(Error::InvalidConfig("group_len must be at least 2".into()));
    }
    let mut out = Vec::new();
    for s in series {
        if s.predictions.len() != s.labels.len() || s.dates.len() != s.labels.len() {
            return Err(Error::LengthMismatch {
                left: s.predictions.len(),
                right: s.labels.len(),
            });
        }
        for (k, start) in (0..s.labels.len()).step_by(group_len).enumerate() {
            let end = (start + group_len).min(s.labels.len());
            let days = end - start;
            if days < group_len && days < MIN_GROUP_DAYS {
                continue;
            }
            let labels = &s.labels[start..end];
            out.push(GroupStats {
                ticker: s.ticker.clone(),
                group_index: k,
                start_date: s.dates[start],
                end_date: s.dates[end - 1],
                days,
                correlation: pearson_correlation(&s.predictions[start..end], labels)?,
                label_std: population_std(labels),
            });
        }
    }
    Ok(out)
}

/// Per group index, the tickers whose correlation strictly exceeds
/// `threshold`. Undefined correlations never qualify.
pub fn select_high_correlation(stats: &[GroupStats], threshold: f64) -> BTreeMap<usize, BTreeSet<String>> {
    let mut out: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for g in stats {
        let entry = out.entry(g.group_index).or_default();
        if g.correlation.is_some_and(|c| c > threshold) {
            entry.insert(g.ticker.clone());
        }
    }
    out
}

pub fn groups_to_csv(stats: &[GroupStats]) -> String {
    let mut out = String::from("ticker,group,start,end,correlation,label_std\n");
    for g in stats {
        let corr = g.correlation.map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            g.ticker,
            g.group_index,
            g.start_date.format("%Y-%m-%d"),
            g.end_date.format("%Y-%m-%d"),
            corr,
            g.label_std
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionTable {
    /// `(label_std, correlation)` for every group with a defined correlation.
    pub pairs: Vec<(f64, f64)>,
    pub rank_correlation: Option<f64>,
}

pub fn dispersion_correlation_table(stats: &[GroupStats]) -> Result<DispersionTable> {
    let pairs: Vec<(f64, f64)> = stats
        .iter()
        .filter_map(|g| g.correlation.map(|c| (g.label_std, c)))
        .collect();
    if pairs.len() < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            available: pairs.len(),
        });
    }
    let (stds, corrs): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    Ok(DispersionTable {
        rank_correlation: spearman_correlation(&stds, &corrs)?,
        pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonDecay {
    pub corr_first20: Option<f64>,
    pub corr_last20: Option<f64>,
}

/// Pools the first `split` and the remaining points of every ticker's
/// prediction path and correlates each half.
pub fn split_horizon_correlation(series: &[PredictionSeries], split: usize) -> Result<HorizonDecay> {
    let (mut p1, mut l1, mut p2, mut l2) = (vec![], vec![], vec![], vec![]);
    for s in series {
        let k = split.min(s.labels.len());
        p1.extend_from_slice(&s.predictions[..k]);
        l1.extend_from_slice(&s.labels[..k]);
        p2.extend_from_slice(&s.predictions[k..]);
        l2.extend_from_slice(&s.labels[k..]);
    }
    Ok(HorizonDecay {
        corr_first20: pearson_correlation(&p1, &l1)?,
        corr_last20: pearson_correlation(&p2, &l2)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HorizonDecayConfig {
    pub train_size: usize,
    pub window_len: usize,
    pub predict_days: usize,
    pub split: usize,
    pub predictor: PredictorKind,
    /// The per-ticker seed is derived from `train.seed` and the ticker index.
    pub train: TrainConfig,
}

impl Default for HorizonDecayConfig {
    fn default() -> Self {
        HorizonDecayConfig {
            train_size: 240,
            window_len: 10,
            predict_days: 40,
            split: 20,
            predictor: PredictorKind::Lstm,
            train: TrainConfig::default(),
        }
    }
}

/// Trains one model per ticker on the `train_size` samples preceding the
/// last `predict_days` samples, then predicts those without retraining.
pub fn horizon_decay_predictions(universe: &Universe, cfg: &HorizonDecayConfig) -> Result<Vec<PredictionSeries>> {
    let tickers: Vec<&str> = universe.tickers().collect();
    tickers
        .par_iter()
        .enumerate()
        .map(|(ti, &ticker)| {
            let frame = build_aligned_frame(universe, ticker).expect("ticker from universe");
            let samples = build_samples(&frame, frame.momentum(), cfg.window_len);
            let needed = cfg.train_size + cfg.predict_days;
            if samples.len() < needed {
                return Err(Error::InsufficientHistory {
                    needed,
                    available: samples.len(),
                }
                .context(format!("horizon decay: ticker {ticker}")));
            }
            let split = samples.len() - cfg.predict_days;
            let dataset = Dataset::fit(&samples[split - cfg.train_size..split])?;
            let train = TrainConfig {
                seed: derive_seed(cfg.train.seed, ti as u64, 0),
                ..cfg.train.clone()
            };
            let fitted = fit_predictor(cfg.predictor, &dataset, &train)
                .map_err(|e| e.context(format!("horizon decay: ticker {ticker}")))?;
            let test = &samples[split..];
            let windows: Vec<_> = test
                .iter()
                .map(|s| apply_scaler(s, &dataset.scaler).window)
                .collect();
            Ok(PredictionSeries {
                ticker: ticker.to_string(),
                dates: test.iter().map(|s| frame.dates[s.end_index + 1]).collect(),
                predictions: fitted.handle.predict(&windows)?,
                labels: test.iter().map(|s| s.label).collect(),
            })
        })
        .collect()
}

/// Synthetic universe whose lag-1 return coefficient moves linearly from
/// `phi1_start` to `phi1_end` across the final `drift_days` days, so a model
/// fitted before the drift meets a gradually changing process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftScenario {
    pub n_tickers: usize,
    pub n_days: usize,
    pub phi1_start: f64,
    pub phi1_end: f64,
    pub phi2: f64,
    pub sigma: f64,
    pub drift_days: usize,
}

impl Default for DriftScenario {
    fn default() -> Self {
        DriftScenario {
            n_tickers: 5,
            n_days: 320,
            phi1_start: -0.6,
            phi1_end: 0.0,
            phi2: -0.2,
            sigma: 0.01,
            drift_days: 40,
        }
    }
}

/// Seeds of the drifting-coefficient horizon study.
pub const DRIFT_SEEDS: [u64; 20] = [
    1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20,
];

impl DriftScenario {
    pub fn regime(&self, day: usize) -> ArRegime {
        let start = self.n_days.saturating_sub(self.drift_days);
        let phi1 = if day < start || self.drift_days < 2 {
            self.phi1_start
        } else {
            let t = (day - start) as f64 / (self.drift_days - 1) as f64;
            self.phi1_start + (self.phi1_end - self.phi1_start) * t
        };
        ArRegime { phi1, phi2: self.phi2, sigma: self.sigma }
    }

    pub fn universe(&self, seed: u64) -> Result<Universe> {
        let spec = SyntheticSpec {
            n_tickers: self.n_tickers,
            n_days: self.n_days,
            seed,
            phi1: self.phi1_start,
            phi2: self.phi2,
            ..SyntheticSpec::default()
        };
        Ok(generate_with_regime(&spec, |day| self.regime(day))?.universe)
    }
}

pub fn horizon_decay_experiment(universe: &Universe, cfg: &HorizonDecayConfig) -> Result<HorizonDecay> {
    split_horizon_correlation(&horizon_decay_predictions(universe, cfg)?, cfg.split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(i: usize) -> NaiveDate {
        NaiveDate::from_ymd_opt(2019, 1, 1).unwrap() + chrono::Days::new(i as u64)
    }

    fn series(ticker: &str, predictions: Vec<f64>, labels: Vec<f64>) -> PredictionSeries {
        PredictionSeries {
            ticker: ticker.into(),
            dates: (0..labels.len()).map(day).collect(),
            predictions,
            labels,
        }
    }

    fn stat(ticker: &str, group: usize, corr: Option<f64>, std: f64) -> GroupStats {
        GroupStats {
            ticker: ticker.into(),
            group_index: group,
            start_date: day(0),
            end_date: day(1),
            days: 2,
            correlation: corr,
            label_std: std,
        }
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.5];
        let affine: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson_correlation(&x, &affine).unwrap().unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_correlation(&x, &neg).unwrap().unwrap() + 1.0).abs() < 1e-15);
        let r = pearson_correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]).unwrap().unwrap();
        assert!((r - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(pearson_correlation(&[1.0, 1.0], &[1.0, 2.0]).unwrap(), None);
        assert!(pearson_correlation(&[1.0], &[1.0]).is_err());
        assert!(pearson_correlation(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn spearman_handles_ties() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        let r = spearman_correlation(&[1.0, 2.0, 3.0], &[1.0, 4.0, 9.0]).unwrap().unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grouping_examples() {
        let labels: Vec<f64> = (0..168).map(|i| ((i * 13) % 7) as f64).collect();
        let g = group_correlations(&[series("A", labels.clone(), labels.clone())], 84).unwrap();
        assert_eq!(g.len(), 2);
        assert!(g.iter().all(|s| (s.correlation.unwrap() - 1.0).abs() < 1e-12));
        assert_eq!(g[1].start_date, day(84));

        let g = group_correlations(&[series("A", vec![0.5; 168], labels.clone())], 84).unwrap();
        assert!(g.iter().all(|s| s.correlation.is_none()));

        // Trailing 19-day block dropped, 20-day block kept.
        let l: Vec<f64> = (0..103).map(|i| (i as f64).sin()).collect();
        assert_eq!(group_correlations(&[series("A", l.clone(), l)], 84).unwrap().len(), 1);
        let l: Vec<f64> = (0..104).map(|i| (i as f64).sin()).collect();
        let g = group_correlations(&[series("A", l.clone(), l)], 84).unwrap();
        assert_eq!((g.len(), g[1].days), (2, 20));
    }

    #[test]
    fn selection_rules() {
        let all_high = [stat("A", 0, Some(0.9), 1.0), stat("B", 0, Some(0.9), 1.0)];
        assert_eq!(select_high_correlation(&all_high, 0.7)[&0].len(), 2);
        let all_low = [stat("A", 0, Some(0.1), 1.0), stat("B", 0, Some(0.1), 1.0)];
        assert!(select_high_correlation(&all_low, 0.7)[&0].is_empty());
        let mixed = [stat("A", 0, Some(0.71), 1.0), stat("B", 0, Some(0.70), 1.0), stat("C", 0, None, 1.0)];
        let sel = select_high_correlation(&mixed, 0.7);
        assert_eq!(sel[&0].iter().collect::<Vec<_>>(), vec!["A"]);
    }

    #[test]
    fn dispersion_examples() {
        let t = dispersion_correlation_table(&[stat("A", 0, Some(0.2), 0.01), stat("A", 1, Some(0.8), 0.03)]).unwrap();
        assert!((t.rank_correlation.unwrap() - 1.0).abs() < 1e-12);
        let same = [stat("A", 0, Some(0.5), 0.02), stat("A", 1, Some(0.5), 0.02)];
        assert_eq!(dispersion_correlation_table(&same).unwrap().rank_correlation, None);
        assert!(dispersion_correlation_table(&[stat("A", 0, Some(0.5), 0.02), stat("B", 0, None, 0.1)]).is_err());
    }

    #[test]
    fn horizon_split_on_perfect_predictions() {
        let l: Vec<f64> = (0..40).map(|i| (i as f64 * 0.9).cos()).collect();
        let h = split_horizon_correlation(&[series("A", l.clone(), l.clone()), series("B", l.clone(), l)], 20).unwrap();
        assert!((h.corr_first20.unwrap() - 1.0).abs() < 1e-12);
        assert!((h.corr_last20.unwrap() - 1.0).abs() < 1e-12);
        let z = split_horizon_correlation(&[series("A", vec![0.0; 40], (0..40).map(|i| i as f64).collect())], 20).unwrap();
        assert_eq!((z.corr_first20, z.corr_last20), (None, None));
    }

    #[test]
    fn differenced_correlation_of_identical_paths() {
        let v = [0.1, 0.3, -0.2, 0.4];
        assert!((differenced_correlation(&v, &v).unwrap().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn groups_csv_leaves_undefined_blank() {
        let csv = groups_to_csv(&[stat("A", 0, None, 0.5)]);
        assert_eq!(csv.lines().nth(1).unwrap(), "A,0,2019-01-01,2019-01-02,,0.5");
    }

    #[test]
    fn drift_regime_is_flat_then_linear() {
        let d = DriftScenario::default();
        assert_eq!(d.regime(0).phi1, -0.6);
        assert_eq!(d.regime(279).phi1, -0.6);
        assert_eq!(d.regime(280).phi1, -0.6);
        assert!((d.regime(299).phi1 - (-0.6 + 0.6 * 19.0 / 39.0)).abs() < 1e-15);
        assert_eq!(d.regime(319).phi1, 0.0);
        let u = d.universe(3).unwrap();
        assert_eq!(u.calendar.len(), 320);
        assert_eq!(u.series.len(), 5);
    }
}

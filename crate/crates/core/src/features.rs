//! The six engineered price/volume features.
//!
//! Feature order inside a [`FeatureVector`] is fixed, since the model consumes
//! windows positionally:
//!
//! | col | feature                | definition                  |
//! |-----|------------------------|-----------------------------|
//! | 0   | `ret`                  | `C_i / C_{i-1} - 1`         |
//! | 1   | `ret_momentum`         | `ret_i - ret_{i-1}`         |
//! | 2   | `ret_acceleration`     | `mom_i - mom_{i-1}`         |
//! | 3   | `week_price_momentum`  | `C_i / C_{i-5} - 1`         |
//! | 4   | `month_price_momentum` | `C_i / C_{i-20} - 1`        |
//! | 5   | `volume_velocity`      | `V_i / V_{i-1} - 1`, `V_{i-1} > 0` |
//!
//! Lookbacks count trading days (rows), not calendar days. A missing bar
//! makes every feature whose lookback touches it undefined.

use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::market_data::{PriceSeries, Universe};

pub const NUM_FEATURES: usize = 6;
pub const WEEK_LAG: usize = 5;
pub const MONTH_LAG: usize = 20;

/// Index of the first fully defined row on a gap-free series.
pub const WARM_UP: usize = MONTH_LAG;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "ret",
    "ret_momentum",
    "ret_acceleration",
    "week_price_momentum",
    "month_price_momentum",
    "volume_velocity",
];

/// Column of `ret_momentum` within a feature vector.
pub const MOMENTUM_COLUMN: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub ret: f64,
    pub ret_momentum: f64,
    pub ret_acceleration: f64,
    pub week_price_momentum: f64,
    pub month_price_momentum: f64,
    pub volume_velocity: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.ret,
            self.ret_momentum,
            self.ret_acceleration,
            self.week_price_momentum,
            self.month_price_momentum,
            self.volume_velocity,
        ]
    }

    pub fn from_array(a: [f64; NUM_FEATURES]) -> Self {
        FeatureVector {
            ret: a[0],
            ret_momentum: a[1],
            ret_acceleration: a[2],
            week_price_momentum: a[3],
            month_price_momentum: a[4],
            volume_velocity: a[5],
        }
    }
}

pub type Sequence = Vec<Option<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    pub ticker: String,
    pub dates: Vec<NaiveDate>,
    /// Per-feature sequences in [`FEATURE_NAMES`] order.
    pub columns: [Sequence; NUM_FEATURES],
    /// `Some` only where all six features are defined.
    pub rows: Vec<Option<FeatureVector>>,
    pub first_defined_index: Option<usize>,
}

impl FeatureFrame {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn defined_count(&self) -> usize {
        self.rows.iter().filter(|r| r.is_some()).count()
    }

    pub fn momentum(&self) -> &Sequence {
        &self.columns[MOMENTUM_COLUMN]
    }

    pub fn returns(&self) -> &Sequence {
        &self.columns[0]
    }

    /// CSV dump with blank cells for undefined entries.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date");
        for name in FEATURE_NAMES {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, date) in self.dates.iter().enumerate() {
            let _ = write!(out, "{}", date.format("%Y-%m-%d"));
            for col in &self.columns {
                out.push(',');
                if let Some(v) = col[i] {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }
}

fn ratio_minus_one(closes: &[Option<f64>], lag: usize) -> Sequence {
    (0..closes.len())
        .map(|i| match (i.checked_sub(lag).and_then(|j| closes[j]), closes[i]) {
            (Some(prev), Some(cur)) => Some(cur / prev - 1.0),
            _ => None,
        })
        .collect()
}

fn first_difference(seq: &[Option<f64>]) -> Sequence {
    (0..seq.len())
        .map(|i| match (i.checked_sub(1).and_then(|j| seq[j]), seq[i]) {
            (Some(prev), Some(cur)) => Some(cur - prev),
            _ => None,
        })
        .collect()
}

fn closes_of(series: &PriceSeries) -> Vec<Option<f64>> {
    series.bars.iter().map(|b| Some(b.close)).collect()
}

fn volumes_of(series: &PriceSeries) -> Vec<Option<u64>> {
    series.bars.iter().map(|b| Some(b.volume)).collect()
}

pub fn returns_of(closes: &[Option<f64>]) -> Sequence {
    ratio_minus_one(closes, 1)
}

pub fn volume_velocity_of(volumes: &[Option<u64>]) -> Sequence {
    (0..volumes.len())
        .map(|i| match (i.checked_sub(1).and_then(|j| volumes[j]), volumes[i]) {
            (Some(prev), Some(cur)) if prev > 0 => Some(cur as f64 / prev as f64 - 1.0),
            _ => None,
        })
        .collect()
}

pub fn compute_returns(series: &PriceSeries) -> Sequence {
    returns_of(&closes_of(series))
}

pub fn compute_return_momentum(returns: &[Option<f64>]) -> Sequence {
    first_difference(returns)
}

pub fn compute_return_acceleration(momentum: &[Option<f64>]) -> Sequence {
    first_difference(momentum)
}

pub fn compute_week_price_momentum(series: &PriceSeries) -> Sequence {
    ratio_minus_one(&closes_of(series), WEEK_LAG)
}

pub fn compute_month_price_momentum(series: &PriceSeries) -> Sequence {
    ratio_minus_one(&closes_of(series), MONTH_LAG)
}

pub fn compute_volume_velocity(series: &PriceSeries) -> Sequence {
    volume_velocity_of(&volumes_of(series))
}

/// Builds the frame over the series' own dates (no gaps possible).
pub fn build_feature_frame(series: &PriceSeries) -> FeatureFrame {
    frame_from_parts(
        series.ticker.clone(),
        series.dates().collect(),
        &closes_of(series),
        &volumes_of(series),
    )
}

/// Builds the frame over the universe calendar; days the ticker lacks are gaps.
pub fn build_aligned_frame(universe: &Universe, ticker: &str) -> Option<FeatureFrame> {
    let closes = universe.aligned_closes(ticker)?;
    let volumes = universe.aligned_volumes(ticker)?;
    Some(frame_from_parts(
        ticker.to_string(),
        universe.calendar.clone(),
        &closes,
        &volumes,
    ))
}

fn frame_from_parts(
    ticker: String,
    dates: Vec<NaiveDate>,
    closes: &[Option<f64>],
    volumes: &[Option<u64>],
) -> FeatureFrame {
    let ret = returns_of(closes);
    let momentum = compute_return_momentum(&ret);
    let acceleration = compute_return_acceleration(&momentum);
    let columns = [
        ret,
        momentum,
        acceleration,
        ratio_minus_one(closes, WEEK_LAG),
        ratio_minus_one(closes, MONTH_LAG),
        volume_velocity_of(volumes),
    ];
    let rows: Vec<Option<FeatureVector>> = (0..dates.len())
        .map(|i| {
            let mut values = [0.0; NUM_FEATURES];
            for (slot, col) in values.iter_mut().zip(&columns) {
                *slot = col[i]?;
            }
            Some(FeatureVector::from_array(values))
        })
        .collect();
    let first_defined_index = rows.iter().position(Option::is_some);
    FeatureFrame {
        ticker,
        dates,
        columns,
        rows,
        first_defined_index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Bar;

    fn series(closes: &[f64], volumes: &[u64]) -> PriceSeries {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let bars = closes
            .iter()
            .zip(volumes)
            .enumerate()
            .map(|(i, (&c, &v))| Bar {
                date: start + chrono::Days::new(i as u64),
                open: c,
                high: c,
                low: c,
                close: c,
                volume: v,
            })
            .collect();
        PriceSeries::new("T", bars).unwrap()
    }

    fn flat(n: usize) -> PriceSeries {
        series(&vec![50.0; n], &vec![1000; n])
    }

    #[test]
    fn returns_examples() {
        assert_eq!(compute_returns(&flat(3)), vec![None, Some(0.0), Some(0.0)]);
        let r = compute_returns(&series(&[100.0, 110.0, 99.0], &[1, 1, 1]));
        assert_eq!(r[0], None);
        assert!((r[1].unwrap() - 0.10).abs() < 1e-15);
        assert!((r[2].unwrap() + 0.10).abs() < 1e-15);
        assert_eq!(compute_returns(&series(&[1.0, 2.0], &[1, 1])), vec![None, Some(1.0)]);
    }

    #[test]
    fn momentum_and_acceleration_examples() {
        let m = compute_return_momentum(&[None, Some(0.10), Some(-0.10)]);
        assert_eq!(m[..2], [None, None]);
        assert!((m[2].unwrap() + 0.20).abs() < 1e-15);

        let a = compute_return_acceleration(&[None, None, Some(-0.20), Some(0.05)]);
        assert_eq!(a[..3], [None, None, None]);
        assert!((a[3].unwrap() - 0.25).abs() < 1e-15);

        let constant = compute_return_momentum(&[None, Some(0.3), Some(0.3), Some(0.3)]);
        assert_eq!(constant, vec![None, None, Some(0.0), Some(0.0)]);
        assert_eq!(
            compute_return_acceleration(&[None, None, Some(0.0), Some(0.0)]),
            vec![None, None, None, Some(0.0)]
        );
    }

    #[test]
    fn week_and_month_momentum() {
        let mut closes = vec![10.0; 6];
        closes[5] = 11.0;
        let w = compute_week_price_momentum(&series(&closes, &[1; 6]));
        assert!(w[..5].iter().all(Option::is_none));
        assert!((w[5].unwrap() - 0.10).abs() < 1e-12);
        assert!(compute_week_price_momentum(&flat(5)).iter().all(Option::is_none));

        let mut closes = vec![10.0; 21];
        closes[20] = 20.0;
        let m = compute_month_price_momentum(&series(&closes, &[1; 21]));
        assert_eq!(m[20], Some(1.0));
        assert!(compute_month_price_momentum(&flat(20)).iter().all(Option::is_none));
        assert!(compute_month_price_momentum(&flat(40))[20..].iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn volume_velocity_rules() {
        assert_eq!(compute_volume_velocity(&series(&[1.0, 1.0], &[1000, 1500])), vec![None, Some(0.5)]);
        assert_eq!(compute_volume_velocity(&series(&[1.0, 1.0], &[0, 1000])), vec![None, None]);
        assert!(compute_volume_velocity(&flat(5))[1..].iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn frame_warm_up() {
        let f = build_feature_frame(&flat(21));
        assert_eq!(f.defined_count(), 1);
        assert_eq!(f.first_defined_index, Some(20));
        assert!(f.rows[20].is_some());

        let f = build_feature_frame(&flat(20));
        assert_eq!(f.defined_count(), 0);
        assert_eq!(f.first_defined_index, None);

        let f = build_feature_frame(&flat(30));
        for row in f.rows[20..].iter() {
            assert_eq!(row.unwrap().to_array(), [0.0; NUM_FEATURES]);
        }
    }

    #[test]
    fn aligned_frame_gap_poisons_lookbacks() {
        use crate::market_data::align_universe;
        let a = series(&(1..=60).map(|i| 100.0 + i as f64).collect::<Vec<_>>(), &[10; 60]);
        let mut b = a.clone();
        b.ticker = "B".into();
        b.bars.remove(40);
        let u = align_universe(vec![a, b]).unwrap();
        let f = build_aligned_frame(&u, "B").unwrap();
        assert_eq!(f.len(), 60);
        // Differenced features spread the gap over three rows; price lookbacks only hit exact lags.
        let undefined: Vec<usize> = (0..60).filter(|&i| f.rows[i].is_none()).collect();
        let expected: Vec<usize> = (0..20).chain(40..=43).chain([45]).collect();
        assert_eq!(undefined, expected);
        assert!(f.columns[3][45].is_none());
        assert!(f.columns[3][44].is_some());
        assert!(f.columns[4][59].is_some());
        assert!(f.columns[5][41].is_none());
        assert!(f.columns[5][42].is_some());
    }

    #[test]
    fn csv_dump_has_blank_cells() {
        let csv = build_feature_frame(&flat(3)).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "date,ret,ret_momentum,ret_acceleration,week_price_momentum,month_price_momentum,volume_velocity"
        );
        assert_eq!(lines[1], "2020-01-01,,,,,,");
        assert_eq!(lines[3], "2020-01-03,0,0,,,,0");
    }
}

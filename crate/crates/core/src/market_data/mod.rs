//! Per-ticker OHLCV histories, calendar alignment, and a seeded synthetic
//! universe generator.

mod csv_io;
mod synthetic;

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{parse_csv_bars, read_csv_dir, write_csv_bars};
pub use synthetic::{
    generate_synthetic_universe, generate_with_regime, ArRegime, Synthetic, SyntheticSpec,
    MIN_DAYS_FOR_SAMPLES,
};

/// One trading day of a single ticker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: u64,
}

impl Bar {
    /// Checks the price invariants. Returns a human-readable reason on failure.
    pub fn check(&self) -> std::result::Result<(), BarViolation> {
        for (name, value) in [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(BarViolation::NonPositive { name, value });
            }
        }
        if self.low > self.open.min(self.close) {
            return Err(BarViolation::Ohlc(format!(
                "low {} above min(open, close) {}",
                self.low,
                self.open.min(self.close)
            )));
        }
        if self.high < self.open.max(self.close) {
            return Err(BarViolation::Ohlc(format!(
                "high {} below max(open, close) {}",
                self.high,
                self.open.max(self.close)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BarViolation {
    NonPositive { name: &'static str, value: f64 },
    Ohlc(String),
}

/// A ticker's bars, strictly increasing by date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub ticker: String,
    pub bars: Vec<Bar>,
}

impl PriceSeries {
    /// Builds a series, sorting bars by date and rejecting duplicates.
    pub fn new(ticker: impl Into<String>, mut bars: Vec<Bar>) -> Result<Self> {
        let ticker = ticker.into();
        if ticker.trim().is_empty() {
            return Err(Error::EmptyInput("ticker symbol"));
        }
        bars.sort_by_key(|b| b.date);
        if let Some(w) = bars.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::DuplicateDate {
                ticker,
                date: w[0].date,
            });
        }
        Ok(PriceSeries { ticker, bars })
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.bars.iter().map(|b| b.date)
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    pub fn volumes(&self) -> Vec<u64> {
        self.bars.iter().map(|b| b.volume).collect()
    }
}

/// A set of series on a shared calendar. Missing days stay missing.
#[derive(Debug, Clone, PartialEq)]
pub struct Universe {
    pub series: BTreeMap<String, PriceSeries>,
    pub calendar: Vec<NaiveDate>,
}

impl Universe {
    pub fn tickers(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    /// Closes indexed by calendar position, `None` where the ticker has no bar.
    pub fn aligned_closes(&self, ticker: &str) -> Option<Vec<Option<f64>>> {
        self.aligned(ticker, |b| b.close)
    }

    pub fn aligned_volumes(&self, ticker: &str) -> Option<Vec<Option<u64>>> {
        self.aligned(ticker, |b| b.volume)
    }

    /// Calendar dates for which `ticker` has no bar.
    pub fn missing_dates(&self, ticker: &str) -> Option<Vec<NaiveDate>> {
        let series = self.series.get(ticker)?;
        let have: BTreeSet<NaiveDate> = series.dates().collect();
        Some(
            self.calendar
                .iter()
                .copied()
                .filter(|d| !have.contains(d))
                .collect(),
        )
    }

    fn aligned<T>(&self, ticker: &str, field: impl Fn(&Bar) -> T) -> Option<Vec<Option<T>>> {
        let series = self.series.get(ticker)?;
        let mut out = Vec::with_capacity(self.calendar.len());
        let mut bars = series.bars.iter().peekable();
        for date in &self.calendar {
            match bars.peek() {
                Some(bar) if bar.date == *date => {
                    out.push(Some(field(bar)));
                    bars.next();
                }
                _ => out.push(None),
            }
        }
        Some(out)
    }
}

/// Builds the calendar as the sorted union of all series dates.
pub fn align_universe(series_list: Vec<PriceSeries>) -> Result<Universe> {
    if series_list.is_empty() {
        return Err(Error::EmptyInput("series list"));
    }
    let mut calendar = BTreeSet::new();
    let mut series = BTreeMap::new();
    for s in series_list {
        calendar.extend(s.dates());
        let ticker = s.ticker.clone();
        if series.insert(ticker.clone(), s).is_some() {
            return Err(Error::DuplicateTicker(ticker));
        }
    }
    if calendar.is_empty() {
        return Err(Error::EmptyInput("all series are empty"));
    }
    Ok(Universe {
        series,
        calendar: calendar.into_iter().collect(),
    })
}

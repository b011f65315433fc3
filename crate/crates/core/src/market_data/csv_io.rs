use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;

use super::{Bar, BarViolation, PriceSeries};
use crate::error::{Error, Result};

pub const BAR_HEADER: [&str; 6] = ["date", "open", "high", "low", "close", "volume"];

/// Parses a `date,open,high,low,close,volume` document into a sorted series.
pub fn parse_csv_bars(text: &str, ticker: &str) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());

    let header = reader.headers()?.clone();
    if header.iter().map(str::trim).ne(BAR_HEADER.iter().copied()) {
        return Err(Error::BadHeader {
            expected: BAR_HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut bars = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |reason: String| Error::MalformedRow { line, reason };
        if record.len() != 6 {
            return Err(malformed(format!("expected 6 fields, found {}", record.len())));
        }
        let field = |i: usize| record[i].trim();

        let date = NaiveDate::parse_from_str(field(0), "%Y-%m-%d")
            .map_err(|e| malformed(format!("date `{}`: {e}", field(0))))?;
        let price = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|e| malformed(format!("{} `{}`: {e}", BAR_HEADER[i], field(i))))
        };
        let volume = field(5)
            .parse::<u64>()
            .map_err(|e| malformed(format!("volume `{}`: {e}", field(5))))?;
        let bar = Bar {
            date,
            open: price(1)?,
            high: price(2)?,
            low: price(3)?,
            close: price(4)?,
            volume,
        };
        match bar.check() {
            Ok(()) => {}
            Err(BarViolation::NonPositive { value, .. }) => {
                return Err(Error::NonPositivePrice { line, value })
            }
            Err(BarViolation::Ohlc(reason)) => return Err(Error::OhlcInconsistent { line, reason }),
        }
        bars.push(bar);
    }
    PriceSeries::new(ticker, bars)
}

/// Serializes a series in the exact format `parse_csv_bars` reads.
pub fn write_csv_bars(series: &PriceSeries) -> String {
    let mut out = BAR_HEADER.join(",");
    out.push('\n');
    for b in &series.bars {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            b.date.format("%Y-%m-%d"),
            b.open,
            b.high,
            b.low,
            b.close,
            b.volume
        );
    }
    out
}

/// Reads every `*.csv` file in `dir`; the file stem is the ticker.
pub fn read_csv_dir(dir: &Path) -> Result<Vec<PriceSeries>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|ext| ext == "csv") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyInput("no CSV files in data directory"));
    }
    paths
        .par_iter()
        .map(|path| {
            let ticker = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_csv_bars(&text, &ticker).map_err(|e| e.context(path.display().to_string()))
        })
        .collect()
}

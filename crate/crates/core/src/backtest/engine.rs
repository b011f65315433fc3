use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::filter::{allocate_positions, filter_and_shrink, FilterConfig};
use crate::error::{Error, Result};

/// Target notionals for one day, signed (positive long).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionBook {
    pub date: NaiveDate,
    pub equity_before: f64,
    pub positions: BTreeMap<String, f64>,
}

impl PositionBook {
    pub fn gross(&self) -> f64 {
        self.positions.values().map(|p| p.abs()).sum()
    }

    pub fn is_flat(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Scores formed at the close of `date`, and the close-to-close returns
/// realized on `hold_date`, the next trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDay {
    pub date: NaiveDate,
    pub hold_date: NaiveDate,
    pub scores: BTreeMap<String, f64>,
    pub realized: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TickerStep {
    pub pnl: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepOutcome {
    pub pnl: f64,
    pub costs: f64,
    pub per_ticker: BTreeMap<String, TickerStep>,
}

/// P&L of holding `book` through the realized returns, and turnover
/// commission against `prev_positions`.
pub fn step_day(
    book: &PositionBook,
    realized_returns: &BTreeMap<String, f64>,
    prev_positions: &BTreeMap<String, f64>,
    commission_rate: f64,
) -> Result<StepOutcome> {
    let mut out = StepOutcome::default();
    let tickers: BTreeSet<&String> = book.positions.keys().chain(prev_positions.keys()).collect();
    for ticker in tickers {
        let pos = book.positions.get(ticker).copied().unwrap_or(0.0);
        let prev = prev_positions.get(ticker).copied().unwrap_or(0.0);
        let pnl = if pos != 0.0 {
            let r = realized_returns
                .get(ticker)
                .ok_or_else(|| Error::MissingReturn {
                    ticker: ticker.clone(),
                    date: book.date,
                })?;
            pos * r
        } else {
            0.0
        };
        let cost = commission_rate * (pos - prev).abs();
        out.pnl += pnl;
        out.costs += cost;
        out.per_ticker.insert(ticker.clone(), TickerStep { pnl, cost });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityCurve {
    pub dates: Vec<NaiveDate>,
    pub equity: Vec<f64>,
}

impl EquityCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date,equity\n");
        for (d, e) in self.dates.iter().zip(&self.equity) {
            let _ = writeln!(out, "{},{e}", d.format("%Y-%m-%d"));
        }
        out
    }

    pub fn initial(&self) -> f64 {
        self.equity[0]
    }

    pub fn last(&self) -> f64 {
        *self.equity.last().expect("curve holds the initial point")
    }
}

/// A maximal run of nonzero positions in one ticker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeEpisode {
    pub ticker: String,
    pub open_date: NaiveDate,
    pub close_date: NaiveDate,
    /// P&L after commission, including the cost of closing out.
    pub net_pnl: f64,
    pub win: bool,
}

pub fn trades_to_csv(trades: &[TradeEpisode]) -> String {
    let mut out = String::from("ticker,open_date,close_date,net_pnl,win\n");
    for t in trades {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            t.ticker,
            t.open_date.format("%Y-%m-%d"),
            t.close_date.format("%Y-%m-%d"),
            t.net_pnl,
            t.win
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestRun {
    pub curve: EquityCurve,
    pub books: Vec<PositionBook>,
    pub trades: Vec<TradeEpisode>,
    pub commission_rate: f64,
    pub filter: FilterConfig,
    /// Nonzero (ticker, day) positions whose P&L after cost was positive.
    pub winning_position_days: usize,
    pub position_days: usize,
}

struct OpenEpisode {
    open_date: NaiveDate,
    last_date: NaiveDate,
    net: f64,
}

/// Daily loop: filter, allocate, step. Positions are rebalanced to target
/// weights every day.
pub fn run_backtest(
    days: &[ScoredDay],
    cfg: &FilterConfig,
    equity_initial: f64,
    commission_rate: f64,
) -> Result<BacktestRun> {
    cfg.validate()?;
    if !(equity_initial > 0.0) {
        return Err(Error::InvalidConfig("equity_initial must be positive".into()));
    }
    if !(commission_rate >= 0.0) {
        return Err(Error::InvalidConfig("commission_rate must be non-negative".into()));
    }
    let first = days.first().ok_or(Error::EmptyInput("backtest days"))?;

    let mut equity = equity_initial;
    let mut curve = EquityCurve {
        dates: vec![first.date],
        equity: vec![equity_initial],
    };
    let mut books = Vec::with_capacity(days.len());
    let mut trades = Vec::new();
    let mut open: BTreeMap<String, OpenEpisode> = BTreeMap::new();
    let mut prev_positions = BTreeMap::new();
    let (mut winning_position_days, mut position_days) = (0, 0);

    for day in days {
        let adjusted: BTreeMap<String, f64> = day
            .scores
            .iter()
            .map(|(t, &s)| (t.clone(), filter_and_shrink(s, cfg)))
            .collect();
        let book = PositionBook {
            date: day.date,
            equity_before: equity,
            positions: allocate_positions(&adjusted, equity),
        };
        let step = step_day(&book, &day.realized, &prev_positions, commission_rate)
            .map_err(|e| match e {
                Error::MissingReturn { ticker, .. } => Error::MissingReturn {
                    ticker,
                    date: day.hold_date,
                },
                other => other,
            })?;

        for (ticker, part) in &step.per_ticker {
            let net = part.pnl - part.cost;
            if book.positions.contains_key(ticker) {
                position_days += 1;
                if net > 0.0 {
                    winning_position_days += 1;
                }
                let ep = open.entry(ticker.clone()).or_insert(OpenEpisode {
                    open_date: day.date,
                    last_date: day.hold_date,
                    net: 0.0,
                });
                ep.net += net;
                ep.last_date = day.hold_date;
            } else if let Some(ep) = open.remove(ticker) {
                // Closing turnover belongs to the episode it ends.
                let net_pnl = ep.net + net;
                trades.push(TradeEpisode {
                    ticker: ticker.clone(),
                    open_date: ep.open_date,
                    close_date: ep.last_date,
                    net_pnl,
                    win: net_pnl > 0.0,
                });
            }
        }

        equity += step.pnl - step.costs;
        if !(equity > 0.0) {
            return Err(Error::Bankruptcy {
                date: day.hold_date,
                equity,
            });
        }
        curve.dates.push(day.hold_date);
        curve.equity.push(equity);
        prev_positions = book.positions.clone();
        books.push(book);
    }
    for (ticker, ep) in open {
        trades.push(TradeEpisode {
            ticker,
            open_date: ep.open_date,
            close_date: ep.last_date,
            net_pnl: ep.net,
            win: ep.net > 0.0,
        });
    }
    trades.sort_by(|a, b| (a.open_date, &a.ticker).cmp(&(b.open_date, &b.ticker)));

    Ok(BacktestRun {
        curve,
        books,
        trades,
        commission_rate,
        filter: *cfg,
        winning_position_days,
        position_days,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(i: u64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 3, 1).unwrap() + chrono::Days::new(i)
    }

    fn map(items: &[(&str, f64)]) -> BTreeMap<String, f64> {
        items.iter().map(|(t, v)| (t.to_string(), *v)).collect()
    }

    fn day(i: u64, scores: &[(&str, f64)], realized: &[(&str, f64)]) -> ScoredDay {
        ScoredDay {
            date: date(i),
            hold_date: date(i + 1),
            scores: map(scores),
            realized: map(realized),
        }
    }

    fn book(positions: &[(&str, f64)]) -> PositionBook {
        PositionBook { date: date(0), equity_before: 1e6, positions: map(positions) }
    }

    #[test]
    fn step_examples() {
        let s = step_day(&book(&[("A", 500_000.0)]), &map(&[("A", 0.02)]), &BTreeMap::new(), 0.0).unwrap();
        assert!((s.pnl - 10_000.0).abs() < 1e-9);
        assert_eq!(s.costs, 0.0);

        let s = step_day(&book(&[]), &BTreeMap::new(), &BTreeMap::new(), 0.0001).unwrap();
        assert_eq!((s.pnl, s.costs), (0.0, 0.0));

        let s = step_day(&book(&[("A", 500_000.0)]), &map(&[("A", 0.0)]), &BTreeMap::new(), 0.0001).unwrap();
        assert!((s.costs - 50.0).abs() < 1e-9);
    }

    #[test]
    fn missing_return_is_an_error() {
        let err = step_day(&book(&[("A", 1.0)]), &BTreeMap::new(), &BTreeMap::new(), 0.0).unwrap_err();
        assert!(matches!(err, Error::MissingReturn { .. }));
    }

    #[test]
    fn zero_predictions_keep_equity_constant() {
        let days: Vec<_> = (0..5).map(|i| day(i, &[("A", 0.0), ("B", 0.001)], &[("A", 0.03), ("B", -0.02)])).collect();
        let run = run_backtest(&days, &FilterConfig::default(), 1e6, 0.0001).unwrap();
        assert!(run.curve.equity.iter().all(|&e| e == 1e6));
        assert!(run.trades.is_empty());
    }

    #[test]
    fn constant_score_compounds() {
        let days: Vec<_> = (0..3).map(|i| day(i, &[("A", 0.02)], &[("A", 0.01)])).collect();
        let run = run_backtest(&days, &FilterConfig::default(), 1_000_000.0, 0.0).unwrap();
        assert!((run.curve.last() - 1_030_301.0).abs() < 1e-6);
        assert_eq!(run.curve.dates.len(), 4);
        assert_eq!(run.trades.len(), 1);
        assert!(run.trades[0].win);
        assert_eq!(run.trades[0].open_date, date(0));
        assert_eq!(run.trades[0].close_date, date(3));
    }

    #[test]
    fn episodes_split_on_flat_days_and_carry_closing_cost() {
        let days = vec![
            day(0, &[("A", 0.02)], &[("A", 0.01)]),
            day(1, &[("A", 0.0)], &[("A", 0.05)]),
            day(2, &[("A", -0.02)], &[("A", 0.01)]),
        ];
        let run = run_backtest(&days, &FilterConfig::default(), 1000.0, 0.001).unwrap();
        assert_eq!(run.trades.len(), 2);
        let first = &run.trades[0];
        // +10 gain, 1.0 to open, 1.0 to close.
        assert!((first.net_pnl - 8.0).abs() < 1e-9);
        assert_eq!(first.close_date, date(1));
        assert!(!run.trades[1].win);
        assert_eq!(run.position_days, 2);
        assert_eq!(run.winning_position_days, 1);
    }

    #[test]
    fn bankruptcy_halts_with_date() {
        let days = vec![day(0, &[("A", 0.02)], &[("A", -1.0)])];
        match run_backtest(&days, &FilterConfig::default(), 1000.0, 0.0) {
            Err(Error::Bankruptcy { date: d, .. }) => assert_eq!(d, date(1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_formats() {
        let days: Vec<_> = (0..2).map(|i| day(i, &[("A", 0.02)], &[("A", 0.01)])).collect();
        let run = run_backtest(&days, &FilterConfig::default(), 100.0, 0.0).unwrap();
        let eq = run.curve.to_csv();
        assert!(eq.starts_with("date,equity\n2021-03-01,100\n2021-03-02,101\n"));
        let tr = trades_to_csv(&run.trades);
        assert!(tr.starts_with("ticker,open_date,close_date,net_pnl,win\nA,2021-03-01,2021-03-03,"));
        assert!(tr.trim_end().ends_with(",true"));
    }
}

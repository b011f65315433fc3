use std::fmt::Write as _;
use std::path::Path;

use super::run::{Manifest, ReportDocument, EQUITY_FILE, MANIFEST_FILE, REPORT_FILE};
use crate::backtest::EquityCurve;
use crate::chart::equity_svg;
use crate::error::{Error, Result};

/// Row labels in display order. "Commision" is spelled as in the reference
/// table this layout mirrors.
pub const TABLE_ROWS: [&str; 12] = [
    "Start Date",
    "End Date",
    "Market Days",
    "In the Market Days",
    "Position Qualified",
    "Commision",
    "Equity Initial",
    "Equity Final",
    "Return",
    "Ann. Return",
    "Win Rate",
    "Max. Drawdown",
];

fn pct(v: f64) -> String {
    format!("{:.6} %", v * 100.0)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_manifest(run_dir: &Path) -> Result<Manifest> {
    let path = run_dir.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(Error::MissingManifest(path));
    }
    serde_json::from_str(&read(&path)?).map_err(|e| Error::from(e).context(path.display().to_string()))
}

pub fn render_table(doc: &ReportDocument) -> String {
    let r = &doc.report;
    let values = [
        r.start_date.to_string(),
        r.end_date.to_string(),
        r.market_days.to_string(),
        pct(r.in_market_days_ratio),
        pct(r.position_qualified_ratio),
        format!("{} %", r.commission_rate * 100.0),
        format!("{:.0}", r.equity_initial),
        format!("{:.0}", r.equity_final),
        pct(r.total_return),
        pct(r.annual_return),
        r.win_rate.map(pct).unwrap_or_else(|| "n/a".into()),
        pct(r.max_drawdown),
    ];
    let width = TABLE_ROWS.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  Value", "Property");
    for (name, value) in TABLE_ROWS.iter().zip(values) {
        let _ = writeln!(out, "{name:<width$}  {value}");
    }
    out
}

fn parse_equity_csv(text: &str) -> Result<EquityCurve> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut curve = EquityCurve { dates: vec![], equity: vec![] };
    for row in reader.deserialize::<(chrono::NaiveDate, f64)>() {
        let (d, e) = row?;
        curve.dates.push(d);
        curve.equity.push(e);
    }
    if curve.equity.is_empty() {
        return Err(Error::EmptyInput("equity curve"));
    }
    Ok(curve)
}

/// Renders the summary table of a completed run; optionally writes the
/// equity chart to `svg_out`.
pub fn cmd_report(run_dir: &Path, svg_out: Option<&Path>) -> Result<String> {
    load_manifest(run_dir)?;
    let report_path = run_dir.join(REPORT_FILE);
    let doc: ReportDocument = serde_json::from_str(&read(&report_path)?)
        .map_err(|e| Error::from(e).context(report_path.display().to_string()))?;
    if let Some(svg) = svg_out {
        let curve = parse_equity_csv(&read(&run_dir.join(EQUITY_FILE))?)?;
        std::fs::write(svg, equity_svg(&curve, "Cumulative Return")).map_err(|e| Error::io(svg, e))?;
    }
    Ok(render_table(&doc))
}

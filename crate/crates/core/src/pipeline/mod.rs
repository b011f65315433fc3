//! End-to-end orchestration behind one JSON config: `generate`, `run` and
//! `report`.

mod config;
mod report;
mod run;

pub use config::{DataSource, LstmSettings, RunConfig};
pub use report::{cmd_report, load_manifest, render_table, TABLE_ROWS};
pub use run::{
    cmd_generate, cmd_run, load_universe, run_pipeline, scored_days, write_outputs,
    AnalysisSummary, FoldOutcome, GenerateOutcome, Manifest, ReportConfigEcho, ReportDocument,
    RunOutput, StrategySummary, EQUITY_FILE, MANIFEST_FILE, REPORT_FILE, TRADES_FILE,
};

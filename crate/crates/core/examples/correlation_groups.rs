//! Per-ticker correlation in four-month blocks, the high-correlation
//! selection, and the label-dispersion study, from a reduced-size LSTM run.
//!
//! ```text
//! cargo run --release --example correlation_groups
//! ```

use momentum_lab::analysis::{dispersion_correlation_table, group_correlations, select_high_correlation};
use momentum_lab::chart::scatter_svg;
use momentum_lab::pipeline::{run_pipeline, LstmSettings, RunConfig};

fn main() -> momentum_lab::Result<()> {
    let config = RunConfig {
        lstm: LstmSettings { hidden_dim: 8, epochs: 60, ..LstmSettings::default() },
        horizon_decay: false,
        ..RunConfig::default()
    };
    let output = run_pipeline(&config)?;
    let groups = group_correlations(&output.series, config.group_len)?;
    for g in &groups {
        let corr = g.correlation.map_or("undefined".to_string(), |c| format!("{c:+.3}"));
        println!("{} group {} {}..{} ({} days): corr {corr}, label std {:.4}", g.ticker, g.group_index, g.start_date, g.end_date, g.days, g.label_std);
    }
    for threshold in [0.5, 0.6, 0.7] {
        println!("selection above {threshold}: {:?}", select_high_correlation(&groups, threshold));
    }
    let table = dispersion_correlation_table(&groups)?;
    println!("rank correlation of label std with correlation: {:?}", table.rank_correlation);
    let svg = scatter_svg(&table.pairs, "Label dispersion vs correlation", "label std", "correlation");
    std::fs::write("dispersion.svg", svg).map_err(|e| momentum_lab::Error::io("dispersion.svg", e))?;
    println!("wrote dispersion.svg");
    Ok(())
}

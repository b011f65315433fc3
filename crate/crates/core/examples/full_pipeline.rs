//! Runs the whole pipeline from a JSON config (or the defaults), writes every
//! artifact and prints the summary table.
//!
//! ```text
//! cargo run --release --example full_pipeline -- [config.json]
//! ```

use std::path::Path;

use momentum_lab::pipeline::{cmd_report, cmd_run, RunConfig};

fn main() -> momentum_lab::Result<()> {
    let config = match std::env::args().nth(1) {
        Some(path) => RunConfig::load(Path::new(&path))?,
        None => RunConfig::default(),
    };
    let output = cmd_run(&config)?;
    println!("{} folds trained; artifacts in {}", output.folds.len(), config.output_dir.display());
    print!("{}", cmd_report(&config.output_dir, None)?);
    for (name, s) in &output.analysis.strategies {
        println!("{name:>16}: total return {:+.4}%", s.report.total_return * 100.0);
    }
    println!("pooled correlation {:?}, persistence {:?}", output.analysis.pooled_correlation, output.analysis.persistence_correlation);
    Ok(())
}

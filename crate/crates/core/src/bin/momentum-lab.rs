use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use momentum_lab::pipeline::{cmd_generate, cmd_report, cmd_run, RunConfig};
use momentum_lab::predictor::PredictorKind;
use momentum_lab::Result;

#[derive(Debug, Parser)]
#[command(name = "momentum-lab", version, about = "Return-momentum forecasting and backtesting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the configured synthetic universe as per-ticker CSV files.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train, predict, backtest and analyse; writes every artifact to the output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replaces the configured predictor, e.g. for baseline runs.
        #[arg(long)]
        predictor: Option<PredictorKind>,
    },
    /// Print the summary table of a completed run.
    Report {
        run_dir: PathBuf,
        /// Also write the equity curve as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn load(config: &PathBuf, out: Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    Ok(cfg)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate { config, out } => {
            let cfg = load(&config, out)?;
            let outcome = cmd_generate(&cfg)?;
            for warning in &outcome.warnings {
                eprintln!("warning: {warning}");
            }
            for file in &outcome.files {
                println!("{}", file.display());
            }
        }
        Command::Run { config, out, predictor } => {
            let mut cfg = load(&config, out)?;
            if let Some(kind) = predictor {
                cfg.predictor = kind;
            }
            let output = cmd_run(&cfg)?;
            println!(
                "{} folds, total return {:.6}%, written to {}",
                output.folds.len(),
                output.report.total_return * 100.0,
                cfg.output_dir.display()
            );
        }
        Command::Report { run_dir, svg } => {
            print!("{}", cmd_report(&run_dir, svg.as_deref())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

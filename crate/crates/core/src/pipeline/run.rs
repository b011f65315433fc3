use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DataSource, RunConfig};
use crate::analysis::{
    dispersion_correlation_table, group_correlations, groups_to_csv, horizon_decay_experiment,
    pearson_correlation, select_high_correlation, DispersionTable, GroupStats, HorizonDecay,
    HorizonDecayConfig, PredictionSeries,
};
use crate::backtest::{
    compute_metrics, run_backtest, trades_to_csv, BacktestReport, BacktestRun, FilterConfig,
    ScoredDay,
};
use crate::chart::{equity_svg, scatter_svg};
use crate::dataset::{apply_scaler, build_samples, make_walk_forward_schedule, Dataset, FoldDump, Sample};
use crate::error::{Error, Result};
use crate::features::{build_aligned_frame, FeatureFrame};
use crate::market_data::{
    align_universe, generate_synthetic_universe, read_csv_dir, write_csv_bars,
    Universe, MIN_DAYS_FOR_SAMPLES,
};
use crate::predictor::{fit_predictor, Checkpoint, PredictorHandle, PredictorKind};
use crate::seed::derive_seed;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
pub const EQUITY_FILE: &str = "equity.csv";
pub const TRADES_FILE: &str = "trades.csv";

/// Stream index reserved for the horizon experiment's seeds.
const HORIZON_STREAM: u64 = u64::MAX;

pub fn load_universe(source: &DataSource) -> Result<Universe> {
    match source {
        DataSource::CsvDir(dir) => align_universe(read_csv_dir(dir)?),
        DataSource::Synthetic(spec) => Ok(generate_synthetic_universe(spec)?.universe),
    }
}

#[derive(Debug, Clone)]
pub struct GenerateOutcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Writes one CSV per synthetic ticker into `<output_dir>/data`.
pub fn cmd_generate(config: &RunConfig) -> Result<GenerateOutcome> {
    let DataSource::Synthetic(spec) = &config.data_source else {
        return Err(Error::InvalidConfig(
            "generate needs a synthetic data_source".into(),
        ));
    };
    let mut warnings = Vec::new();
    if !spec.yields_samples() {
        let msg = format!(
            "n_days = {} yields no samples; at least {MIN_DAYS_FOR_SAMPLES} days are needed",
            spec.n_days
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let synthetic = generate_synthetic_universe(spec)?;
    if synthetic.clamp_events > 0 {
        let msg = format!("{} generated returns were clamped at -50%", synthetic.clamp_events);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let dir = config.output_dir.join("data");
    create_dir(&dir)?;
    let mut files = Vec::new();
    for series in synthetic.universe.series.values() {
        let path = dir.join(format!("{}.csv", series.ticker));
        write_file(&path, &write_csv_bars(series))?;
        files.push(path);
    }
    Ok(GenerateOutcome { files, warnings })
}

/// One trained fold for one ticker.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub ticker: String,
    pub fold: usize,
    pub seed: u64,
    pub checkpoint: Checkpoint,
    pub dump: FoldDump,
    pub final_loss: Option<f64>,
    /// `(end_index, prediction, persistence baseline, label)`.
    pub predictions: Vec<(usize, f64, f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategySummary {
    pub filter: FilterConfig,
    pub report: BacktestReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub predictor: PredictorKind,
    /// Pooled correlation of predictions with realized labels.
    pub pooled_correlation: Option<f64>,
    pub persistence_correlation: Option<f64>,
    pub selection_threshold: f64,
    pub selection: BTreeMap<usize, Vec<String>>,
    pub dispersion: Option<DispersionTable>,
    pub horizon_decay: Option<HorizonDecay>,
    pub strategies: BTreeMap<String, StrategySummary>,
}

/// Everything a run produces, before it is written to disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub frames: Vec<FeatureFrame>,
    pub folds: Vec<FoldOutcome>,
    pub series: Vec<PredictionSeries>,
    pub groups: Vec<GroupStats>,
    pub backtest: BacktestRun,
    pub report: BacktestReport,
    pub analysis: AnalysisSummary,
}

struct TickerData {
    frame: FeatureFrame,
    samples: Vec<Sample>,
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))
}

fn run_fold(
    config: &RunConfig,
    ticker_index: usize,
    data: &TickerData,
    fold: usize,
    train: std::ops::Range<usize>,
    predict: std::ops::Range<usize>,
) -> Result<FoldOutcome> {
    let ticker = &data.frame.ticker;
    let dataset = Dataset::fit(&data.samples[train.clone()])?;
    let seed = derive_seed(config.seed, ticker_index as u64, fold as u64);
    let train_config = config.lstm.train_config(seed);
    let fitted = fit_predictor(config.predictor, &dataset, &train_config)?;
    let baseline = PredictorHandle::Persistence {
        scaler: dataset.scaler.clone(),
    };

    let mut predictions = Vec::with_capacity(predict.len());
    for s in &data.samples[predict.clone()] {
        let window = apply_scaler(s, &dataset.scaler).window;
        predictions.push((
            s.end_index,
            fitted.handle.predict_one(&window)?,
            baseline.predict_one(&window)?,
            s.label,
        ));
    }
    let end_indices = |r: std::ops::Range<usize>| data.samples[r].iter().map(|s| s.end_index).collect();
    let lstm_config = (config.predictor == PredictorKind::Lstm).then_some(&train_config);
    Ok(FoldOutcome {
        ticker: ticker.clone(),
        fold,
        seed,
        checkpoint: Checkpoint::from_handle(&fitted.handle, lstm_config),
        dump: FoldDump {
            ticker: ticker.clone(),
            fold,
            train_end_indices: end_indices(train),
            predict_end_indices: end_indices(predict),
            scaler: dataset.scaler,
        },
        final_loss: fitted.loss_history.last().copied(),
        predictions,
    })
}

/// Builds daily score/return rows from per-fold predictions; `pick` selects
/// the score used (model, baseline or label).
pub fn scored_days(
    frames: &[FeatureFrame],
    folds: &[FoldOutcome],
    pick: impl Fn(&FoldOutcome, &(usize, f64, f64, f64)) -> Option<f64>,
) -> Vec<ScoredDay> {
    let frame_of: BTreeMap<&str, &FeatureFrame> = frames.iter().map(|f| (f.ticker.as_str(), f)).collect();
    let mut by_day: BTreeMap<usize, ScoredDay> = BTreeMap::new();
    for fold in folds {
        let frame = frame_of[fold.ticker.as_str()];
        for row in &fold.predictions {
            let t = row.0;
            let Some(score) = pick(fold, row) else { continue };
            let Some(realized) = frame.returns()[t + 1] else { continue };
            let day = by_day.entry(t).or_insert_with(|| ScoredDay {
                date: frame.dates[t],
                hold_date: frame.dates[t + 1],
                scores: BTreeMap::new(),
                realized: BTreeMap::new(),
            });
            day.scores.insert(fold.ticker.clone(), score);
            day.realized.insert(fold.ticker.clone(), realized);
        }
    }
    by_day.into_values().collect()
}

fn pooled(series: &[PredictionSeries], baseline: Option<&[Vec<f64>]>) -> Result<Option<f64>> {
    let preds: Vec<f64> = match baseline {
        Some(b) => b.iter().flatten().copied().collect(),
        None => series.iter().flat_map(|s| s.predictions.iter().copied()).collect(),
    };
    let labels: Vec<f64> = series.iter().flat_map(|s| s.labels.iter().copied()).collect();
    if labels.len() < 2 {
        return Ok(None);
    }
    pearson_correlation(&preds, &labels)
}

fn strategy(
    days: &[ScoredDay],
    filter: FilterConfig,
    config: &RunConfig,
    universe_size: usize,
) -> Result<(BacktestRun, StrategySummary)> {
    let run = run_backtest(days, &filter, config.equity_initial, config.commission_rate)?;
    let report = compute_metrics(&run, universe_size)?;
    Ok((run, StrategySummary { filter, report }))
}

/// Executes ingest → features → walk-forward train/predict → backtest →
/// analysis, entirely in memory.
pub fn run_pipeline(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let universe = load_universe(&config.data_source).map_err(|e| e.context("market-data"))?;

    let tickers: Vec<TickerData> = universe
        .tickers()
        .map(|ticker| {
            let frame = build_aligned_frame(&universe, ticker).expect("ticker from universe");
            let samples = build_samples(&frame, frame.momentum(), config.window_len);
            TickerData { frame, samples }
        })
        .collect();

    let mut jobs = Vec::new();
    for (ti, data) in tickers.iter().enumerate() {
        let schedule = make_walk_forward_schedule(data.samples.len(), config.train_size, config.horizon)
            .map_err(|e| e.context(format!("dataset-builder: ticker {}", data.frame.ticker)))?;
        for (k, fold) in schedule.folds.into_iter().enumerate() {
            jobs.push((ti, k, fold));
        }
    }

    let pool = thread_pool(config.workers)?;
    let folds: Vec<FoldOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|(ti, k, fold)| {
                let data = &tickers[*ti];
                run_fold(config, *ti, data, *k, fold.train.clone(), fold.predict.clone()).map_err(|e| {
                    e.context(format!("predictor: ticker {}, fold {k}", data.frame.ticker))
                })
            })
            .collect::<Result<_>>()
    })?;

    let frames: Vec<FeatureFrame> = tickers.into_iter().map(|t| t.frame).collect();
    let mut series = Vec::new();
    let mut baselines = Vec::new();
    for frame in &frames {
        let rows: Vec<_> = folds
            .iter()
            .filter(|f| f.ticker == frame.ticker)
            .flat_map(|f| f.predictions.iter().copied())
            .collect();
        series.push(PredictionSeries {
            ticker: frame.ticker.clone(),
            dates: rows.iter().map(|r| frame.dates[r.0 + 1]).collect(),
            predictions: rows.iter().map(|r| r.1).collect(),
            labels: rows.iter().map(|r| r.3).collect(),
        });
        baselines.push(rows.iter().map(|r| r.2).collect::<Vec<f64>>());
    }

    let universe_size = frames.len();
    let model_days = scored_days(&frames, &folds, |_, r| Some(r.1));
    let label_days = scored_days(&frames, &folds, |_, r| Some(r.3));
    let backtest_ctx = |e: Error| e.context("backtest-engine");
    let (backtest, main) = strategy(&model_days, config.filter, config, universe_size).map_err(backtest_ctx)?;
    let (_, unfiltered) =
        strategy(&model_days, FilterConfig::unfiltered(), config, universe_size).map_err(backtest_ctx)?;
    let (_, true_label) = strategy(&label_days, config.filter, config, universe_size).map_err(backtest_ctx)?;

    let groups = group_correlations(&series, config.group_len).map_err(|e| e.context("analysis"))?;
    let selection = select_high_correlation(&groups, config.correlation_threshold);
    let selected: BTreeMap<(String, usize), ()> = groups
        .iter()
        .filter(|g| selection.get(&g.group_index).is_some_and(|s| s.contains(&g.ticker)))
        .map(|g| ((g.ticker.clone(), g.group_index), ()))
        .collect();
    // A prediction's position within its ticker's series decides its group.
    let mut ordinal: BTreeMap<(String, usize), usize> = BTreeMap::new();
    let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
    for fold in &folds {
        for row in &fold.predictions {
            let c = counters.entry(fold.ticker.as_str()).or_insert(0);
            ordinal.insert((fold.ticker.clone(), row.0), *c);
            *c += 1;
        }
    }
    let subset_days = scored_days(&frames, &folds, |f, r| {
        let i = ordinal[&(f.ticker.clone(), r.0)];
        selected
            .contains_key(&(f.ticker.clone(), i / config.group_len))
            .then_some(r.1)
    });
    let mut strategies = BTreeMap::from([
        ("filtered".to_string(), main),
        ("unfiltered".to_string(), unfiltered),
        ("true_label".to_string(), true_label),
    ]);
    if !subset_days.is_empty() {
        let (_, subset) = strategy(&subset_days, config.filter, config, universe_size).map_err(backtest_ctx)?;
        strategies.insert("high_correlation".to_string(), subset);
    }

    let horizon_decay = if config.horizon_decay {
        let cfg = HorizonDecayConfig {
            train_size: config.train_size,
            window_len: config.window_len,
            predictor: config.predictor,
            train: config.lstm.train_config(derive_seed(config.seed, HORIZON_STREAM, 0)),
            ..Default::default()
        };
        match horizon_decay_experiment(&universe, &cfg) {
            Ok(h) => Some(h),
            Err(e) if e.exit_code() == 2 => {
                log::warn!("horizon decay skipped: {e}");
                None
            }
            Err(e) => return Err(e.context("analysis")),
        }
    } else {
        None
    };

    let analysis = AnalysisSummary {
        predictor: config.predictor,
        pooled_correlation: pooled(&series, None)?,
        persistence_correlation: pooled(&series, Some(&baselines))?,
        selection_threshold: config.correlation_threshold,
        selection: selection
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().collect()))
            .collect(),
        dispersion: dispersion_correlation_table(&groups).ok(),
        horizon_decay,
        strategies,
    };
    let report = analysis.strategies["filtered"].report.clone();

    Ok(RunOutput {
        config: config.clone(),
        frames,
        folds,
        series,
        groups,
        backtest,
        report,
        analysis,
    })
}

/// The report document: metrics plus the settings that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDocument {
    #[serde(flatten)]
    pub report: BacktestReport,
    pub config: ReportConfigEcho,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportConfigEcho {
    pub predictor: PredictorKind,
    pub filter: FilterConfig,
    pub train_size: usize,
    pub horizon: usize,
    pub window_len: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub seed_derivation: String,
    pub tickers: Vec<String>,
    pub fold_seeds: BTreeMap<String, Vec<u64>>,
    pub files: Vec<String>,
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes every artifact of a run under `dir`; returns the relative paths.
pub fn write_outputs(output: &RunOutput, dir: &Path) -> Result<Vec<String>> {
    let mut files: Vec<(String, String)> = Vec::new();
    let config = &output.config;

    let doc = ReportDocument {
        report: output.report.clone(),
        config: ReportConfigEcho {
            predictor: config.predictor,
            filter: config.filter,
            train_size: config.train_size,
            horizon: config.horizon,
            window_len: config.window_len,
            seed: config.seed,
        },
    };
    files.push((REPORT_FILE.into(), to_json(&doc)?));
    files.push((EQUITY_FILE.into(), output.backtest.curve.to_csv()));
    files.push((TRADES_FILE.into(), trades_to_csv(&output.backtest.trades)));
    files.push((
        "equity.svg".into(),
        equity_svg(&output.backtest.curve, "Cumulative Return"),
    ));

    let mut predictions = String::from("ticker,date,end_index,fold,prediction,persistence,label\n");
    for fold in &output.folds {
        let frame = output.frames.iter().find(|f| f.ticker == fold.ticker).expect("frame");
        for (t, p, b, y) in &fold.predictions {
            let _ = writeln!(
                predictions,
                "{},{},{t},{},{p},{b},{y}",
                fold.ticker,
                frame.dates[t + 1].format("%Y-%m-%d"),
                fold.fold
            );
        }
        files.push((
            format!("checkpoints/{}/fold_{:03}.json", fold.ticker, fold.fold),
            fold.checkpoint.to_json()? + "\n",
        ));
        files.push((
            format!("folds/{}/fold_{:03}.json", fold.ticker, fold.fold),
            to_json(&fold.dump)?,
        ));
    }
    files.push(("predictions.csv".into(), predictions));
    for frame in &output.frames {
        files.push((format!("features/{}.csv", frame.ticker), frame.to_csv()));
    }
    files.push(("analysis/groups.csv".into(), groups_to_csv(&output.groups)));
    files.push(("analysis/summary.json".into(), to_json(&output.analysis)?));
    if let Some(table) = &output.analysis.dispersion {
        files.push((
            "analysis/dispersion.svg".into(),
            scatter_svg(&table.pairs, "Label dispersion vs correlation", "label std", "correlation"),
        ));
    }

    let mut fold_seeds: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for fold in &output.folds {
        fold_seeds.entry(fold.ticker.clone()).or_default().push(fold.seed);
    }
    let mut names: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    names.push(MANIFEST_FILE.into());
    let manifest = Manifest {
        schema_version: 1,
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        seed_derivation: "splitmix64 mix of (seed, ticker index, fold index)".into(),
        tickers: output.frames.iter().map(|f| f.ticker.clone()).collect(),
        fold_seeds,
        files: names.clone(),
    };
    files.push((MANIFEST_FILE.into(), to_json(&manifest)?));

    for (name, contents) in &files {
        write_file(&dir.join(name), contents)?;
    }
    Ok(names)
}

/// Runs the pipeline and writes its artifacts into `config.output_dir`.
pub fn cmd_run(config: &RunConfig) -> Result<RunOutput> {
    let output = run_pipeline(config)?;
    write_outputs(&output, &config.output_dir)?;
    Ok(output)
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use momentum_lab::pipeline::{cmd_run, load_manifest, RunConfig, TABLE_ROWS};
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_momentum-lab"))
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn synthetic(n_tickers: usize, n_days: usize) -> Value {
    json!({"synthetic": {"n_tickers": n_tickers, "n_days": n_days, "seed": 11, "phi1": 0.3, "phi2": -0.2,
        "sigma": 0.01, "init_price": 100.0, "base_volume": 1000000.0, "volume_noise": 0.3}})
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn generate_writes_one_csv_per_ticker_deterministically() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "gen.json", &json!({"data_source": synthetic(3, 400)}));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_ok(bin().args(["generate", "--config"]).arg(&cfg).arg("--out").arg(&a));
    run_ok(bin().args(["generate", "--config"]).arg(&cfg).arg("--out").arg(&b));
    let files = read_tree(&a.join("data"));
    assert_eq!(files.len(), 3);
    for (name, bytes) in &files {
        let text = std::str::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().next(), Some("date,open,high,low,close,volume"));
        assert_eq!(text.lines().count(), 401, "{name:?}");
    }
    assert_eq!(files, read_tree(&b.join("data")));
}

#[test]
fn generate_warns_when_no_samples_are_possible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "gen.json", &json!({"data_source": synthetic(1, 30)}));
    let out = run_ok(bin().args(["generate", "--config"]).arg(&cfg).arg("--out").arg(tmp.path().join("o")));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("warning") && stderr.contains("31"), "stderr: {stderr}");
}

#[test]
fn zero_predictor_run_stays_in_cash() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("run");
    let cfg = write_config(tmp.path(), "run.json", &json!({"data_source": synthetic(2, 300), "horizon_decay": false}));
    run_ok(bin().args(["run", "--predictor", "zero", "--config"]).arg(&cfg).arg("--out").arg(&out_dir));

    let report: Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["total_return"].as_f64(), Some(0.0));
    assert_eq!(report["equity_final"].as_f64(), Some(1_000_000.0));
    assert_eq!(report["win_rate"], Value::Null);
    assert_eq!(report["config"]["predictor"], "zero");
    assert!(report.get("commission_rate").is_some());

    let table = String::from_utf8(run_ok(bin().arg("report").arg(&out_dir)).stdout).unwrap();
    let names: Vec<&str> = table.lines().skip(1).map(|l| l.split("  ").next().unwrap().trim()).collect();
    assert_eq!(names, TABLE_ROWS);
    let win = table.lines().find(|l| l.starts_with("Win Rate")).unwrap();
    assert!(win.trim_end().ends_with("n/a"), "{win}");

    let svg = tmp.path().join("equity.svg");
    run_ok(bin().arg("report").arg(&out_dir).arg("--svg").arg(&svg));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn report_on_empty_dir_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    let out = bin().arg("report").arg(tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest.json"));
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(bin().arg("run").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", &json!({"train_sise": 100}));
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("train_sise"));
}

#[test]
fn insufficient_history_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "short.json", &json!({"data_source": synthetic(1, 100), "horizon_decay": false}));
    let out = bin().args(["run", "--predictor", "zero", "--config"]).arg(&cfg).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn tiny_lstm_config(data_source: Value, out: &Path) -> RunConfig {
    let value = json!({
        "data_source": data_source,
        "train_size": 60,
        "horizon": 20,
        "lstm": {"hidden_dim": 4, "epochs": 3},
        "group_len": 40,
        "horizon_decay": false,
        "output_dir": out,
        "seed": 5,
    });
    RunConfig::from_json(&value.to_string()).unwrap()
}

#[test]
fn runs_differing_only_in_output_dir_are_identical() {
    let tmp = TempDir::new().unwrap();
    let a = cmd_run(&tiny_lstm_config(synthetic(2, 150), &tmp.path().join("a"))).unwrap();
    cmd_run(&tiny_lstm_config(synthetic(2, 150), &tmp.path().join("b"))).unwrap();
    assert!(!a.folds.is_empty());
    let (ta, tb) = (read_tree(&tmp.path().join("a")), read_tree(&tmp.path().join("b")));
    let differs: Vec<_> = ta.iter().filter(|(k, v)| tb.get(*k) != Some(v)).map(|(k, _)| k.clone()).collect();
    // Only the manifest echoes the output directory.
    assert_eq!(differs, vec![PathBuf::from("manifest.json")]);

    // The manifest alone reproduces the run.
    let manifest = load_manifest(&tmp.path().join("a")).unwrap();
    let mut replay = manifest.config;
    replay.output_dir = tmp.path().join("c");
    cmd_run(&replay).unwrap();
    assert_eq!(read_tree(&tmp.path().join("c")).get(Path::new("report.json")), ta.get(Path::new("report.json")));
}

#[test]
fn csv_input_directory_is_not_modified() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "gen.json", &json!({"data_source": synthetic(2, 150)}));
    run_ok(bin().args(["generate", "--config"]).arg(&cfg).arg("--out").arg(tmp.path().join("g")));
    let data = tmp.path().join("g").join("data");
    let before = read_tree(&data);

    let out = tmp.path().join("r");
    let from_csv = cmd_run(&tiny_lstm_config(json!({"csv_dir": data}), &out)).unwrap();
    assert_eq!(read_tree(&data), before);

    let from_synthetic = cmd_run(&tiny_lstm_config(synthetic(2, 150), &tmp.path().join("s"))).unwrap();
    assert_eq!(from_csv.report.equity_final, from_synthetic.report.equity_final);
    for expected in ["report.json", "equity.csv", "trades.csv", "predictions.csv", "analysis/groups.csv", "analysis/summary.json"] {
        assert!(out.join(expected).is_file(), "missing {expected}");
    }
}

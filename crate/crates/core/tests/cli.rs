use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_tbm-forecast");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn quick_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["--data", "synthetic", "--model", "rf", "--target", "torque", "--out", out];
    v.extend_from_slice(extra);
    v
}

#[test]
fn single_cell_writes_four_files_without_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&quick_args(out.to_str().unwrap(), &["--no-plots"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = files_under(&out);
    let rel: Vec<String> = files
        .iter()
        .map(|p| p.strip_prefix(&out).unwrap().display().to_string())
        .collect();
    assert_eq!(
        rel,
        [
            "cells/swol_rf_torque/loss_history.csv",
            "cells/swol_rf_torque/predictions.csv",
            "manifest.json",
            "results.csv",
        ]
    );
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("target,model,setting,rmse,mape_pct,n_eval,n_skipped,gain_single_pct,gain_multi_pct"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.is_object());
}

#[test]
fn plots_are_written_when_enabled() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&quick_args(out.to_str().unwrap(), &[]));
    assert!(o.status.success());
    let svg = out.join("cells/swol_rf_torque/torque.svg");
    assert!(fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn repeated_runs_give_identical_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&quick_args(out.to_str().unwrap(), &["--no-plots", "--seed", "3"]));
        assert!(o.status.success());
    }
    let file = "cells/swol_rf_torque/predictions.csv";
    assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap());
    assert_eq!(fs::read(a.join("results.csv")).unwrap(), fs::read(b.join("results.csv")).unwrap());
}

#[test]
fn unwritable_output_directory_fails_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let out = blocker.join("run");
    let o = run(&quick_args(out.to_str().unwrap(), &["--no-plots"]));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "tau = 5\ntau = 6\n").unwrap();
    let o = run(&["--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["--model", "transformer"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn synthesized_csv_drives_a_lasso_run() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    let o = run(&["synth", "--out", csv.to_str().unwrap(), "--seed", "2"]);
    assert!(o.status.success());
    let header = fs::read_to_string(&csv).unwrap();
    assert_eq!(header.lines().count(), 3001);

    let conf = dir.path().join("run.conf");
    fs::write(
        &conf,
        "# relative paths resolve against this file\ndata = series.csv\nsetting = swl\nmodel = rf\ntarget = thrust\nplots = false\nout = out\n",
    )
    .unwrap();
    let o = run(&["--config", conf.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let report = fs::read_to_string(out.join("lasso_coefficients.csv")).unwrap();
    assert!(report.starts_with("feature,torque_coef,advance_rate_coef,thrust_coef"));
    assert!(out.join("cells/swl_rf_thrust/predictions.csv").exists());
}

#[test]
fn missing_column_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("short.csv");
    fs::write(&csv, "a,b\n1,2\n3,4\n").unwrap();
    let o = run(&["--data", csv.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("column"));
}

#[test]
fn defaults_round_trip_through_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["defaults"]);
    assert!(o.status.success());
    let conf = dir.path().join("defaults.conf");
    fs::write(&conf, &o.stdout).unwrap();
    let keys = run(&["keys"]);
    let listed = String::from_utf8(keys.stdout).unwrap().lines().count();
    let set = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && l.contains('='))
        .count();
    assert_eq!(listed, set);
    let parsed = tbm_forecast::experiment::ExperimentConfig::from_file(&conf).unwrap();
    assert_eq!(parsed.tau, 5);
}

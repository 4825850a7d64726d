use std::path::Path;
use std::process::{Command, Output};

use spmt_hybrid::spmt::write_trace_csv;
use spmt_hybrid::{make_constant_profile, ParameterFile, Spmt};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spmt-hybrid"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A cheap dataset directory: default truth, a coarse solver grid.
fn gen_small(out: &Path) -> Output {
    run(&["gen-data", "--out", path(out), "--n-r", "8", "--dt", "2"])
}

#[test]
fn gen_data_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data");
    let first = gen_small(&out);
    assert!(
        first.status.success(),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let stdout = String::from_utf8(first.stdout).unwrap();
    assert!(stdout.contains("train: 40 datasets"), "{stdout}");
    assert!(stdout.contains("test: 24 datasets"), "{stdout}");
    let manifest = std::fs::read(out.join("manifest.json")).unwrap();

    assert!(gen_small(&out).status.success());
    assert_eq!(std::fs::read(out.join("manifest.json")).unwrap(), manifest);
}

#[test]
fn missing_parameter_file_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data");
    let missing = dir.path().join("nope.json");
    let o = run(&["gen-data", "--params", path(&missing), "--out", path(&out)]);
    assert!(!o.status.success());
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(
        run(&["simulate", "--c-rate", "1", "--drive", "udds-like"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["train", "--out", "x"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn train_eval_and_simulate_with_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(gen_small(&data).status.success());

    let untrained = dir.path().join("untrained");
    let o = run(&[
        "train",
        "--data",
        path(&data),
        "--epochs",
        "0",
        "--out",
        path(&untrained),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: --epochs 0"));

    let model_dir = dir.path().join("model");
    let o = run(&[
        "train",
        "--data",
        path(&data),
        "--epochs",
        "2",
        "--seed",
        "3",
        "--out",
        path(&model_dir),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let history = std::fs::read_to_string(model_dir.join("history.csv")).unwrap();
    assert_eq!(history.lines().next().unwrap(), "epoch,train_loss,val_rmse");
    assert_eq!(history.lines().count(), 3);
    let model = model_dir.join("model.json");

    let report = dir.path().join("report");
    let o = run(&[
        "eval",
        "--model",
        path(&model),
        "--data",
        path(&data),
        "--out",
        path(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("CC-10C"));
    assert!(report.join("report_test.csv").exists());
    assert!(report.join("report_test.txt").exists());
    assert_eq!(
        std::fs::read_dir(report.join("plots_test"))
            .unwrap()
            .count(),
        24
    );

    let o = run(&[
        "simulate",
        "--model",
        path(&model),
        "--c-rate",
        "2",
        "--soc0",
        "0.8",
        "--t-end",
        "120",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",V_hybrid"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 61);
}

#[test]
fn diverging_training_exits_two_with_history() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(gen_small(&data).status.success());
    let out = dir.path().join("model");
    let o = run(&[
        "train",
        "--data",
        path(&data),
        "--epochs",
        "5",
        "--learning-rate",
        "1e6",
        "--out",
        path(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(out.join("history.csv").exists());
    assert!(!out.join("model.json").exists());
}

#[test]
fn resting_cell_has_a_flat_trace() {
    let o = run(&[
        "simulate",
        "--current",
        "0",
        "--soc0",
        "0.5",
        "--t-end",
        "300",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let volts: Vec<&str> = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(volts.len(), 301);
    assert!(volts.iter().all(|v| *v == volts[0]));
}

#[test]
fn one_c_trace_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = run(&[
        "simulate",
        "--c-rate",
        "1",
        "--soc0",
        "0.9",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let pf = ParameterFile::lco_graphite();
    let profile = make_constant_profile(1.0, pf.cell.capacity_ah(), 3600).unwrap();
    let trace = Spmt::new(pf.cell, pf.solver)
        .unwrap()
        .simulate(0.9, &profile, 298.15, 298.15, 3600.0)
        .unwrap();
    let mut expected = Vec::new();
    write_trace_csv(&mut expected, &trace, None).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), expected);
}

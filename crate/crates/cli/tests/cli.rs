use std::path::Path;
use std::process::{Command, Output};

use wide_compress::activation::Activation;
use wide_compress::conv::{save_cnn, Cnn, ConvLayer};
use wide_compress::model_io::load_model;

fn wcomp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wcomp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(wcomp(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(wcomp(dir.path(), &["compress", "m.json", "--prune", "0.3", "--quantize", "4"]).status.code(), Some(1));
    assert_eq!(wcomp(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = wcomp(dir.path(), &["compress", "absent.json", "--wide", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn dry_run_lists_every_run() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.json"), r#"{"widths": [8, 16], "trials_per_width": 2, "prunes_per_trial": 3}"#).unwrap();
    let o = wcomp(dir.path(), &["sweep", "--dry-run", "--config", "s.json", "--seed", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "setting,width,trial,prune_rep,seed");
    assert_eq!(lines.len(), 1 + 2 * 2 * 2 * 3);
    let again = wcomp(dir.path(), &["sweep", "--dry-run", "--config", "s.json", "--seed", "5"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn train_compress_check_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = wcomp(d, &["train", "--synthetic", "300", "--hidden", "24", "--activations", "tanh,identity", "--epochs", "3", "--out", "m.json", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["m.json", "m.train.csv", "m.data.csv", "m.data.json"] {
        assert!(d.join(f).exists(), "{f} missing");
    }
    let (dense, _) = load_model(d.join("m.json")).unwrap();
    assert_eq!(dense.dims(), vec![8, 24, 1]);

    let o = wcomp(d, &["compress", "m.json", "--data", "m.data.csv", "--targets", "y0", "--wide", "1", "--prune", "0.3", "--alpha", "0.9", "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (pruned, kappa) = load_model(d.join("m.compressed.json")).unwrap();
    assert!(kappa.is_some());
    assert!(pruned.weights(0).nnz() < dense.weights(0).nnz());
    assert_eq!(pruned.weights(1), dense.weights(1));
    let log: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("m.compressed.log.json")).unwrap()).unwrap();
    assert_eq!(log["log"]["layers"].as_array().unwrap().len(), 1);

    std::fs::write(d.join("b.json"), r#"{"mode": {"prune": {"p": 0.3}}, "alpha": 0.9, "delta": 0.1, "xi": 0.05, "wide": [1], "dense_loss": 0.02}"#).unwrap();
    let o = wcomp(d, &["check-bounds", "m.json", "--config", "b.json", "--out", "r.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["verdicts"][0]["id"], "prune/wide");
    assert!(report["loss_bound"].as_f64().unwrap() > 0.02);
}

#[test]
fn invalid_bound_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = wcomp(d, &["train", "--synthetic", "100", "--hidden", "6", "--activations", "relu,identity", "--epochs", "1", "--out", "m.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    std::fs::write(d.join("b.json"), r#"{"mode": {"prune": {"p": 0.3}}, "alpha": 1.5, "delta": 0.1, "xi": 0.05, "wide": [1]}"#).unwrap();
    let o = wcomp(d, &["check-bounds", "m.json", "--config", "b.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha"));
}

#[test]
fn convert_conv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let kernel: Vec<f64> = (0..2 * 1 * 2 * 2).map(|i| i as f64 * 0.25 - 0.5).collect();
    let cnn = Cnn::new(vec![ConvLayer::new(2, 1, 2, 3, kernel).unwrap()], vec![Activation::Relu], None).unwrap();
    save_cnn(d.join("c.json"), &cnn).unwrap();
    let o = wcomp(d, &["convert-conv", "c.json", "--out", "fc.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (fc, _) = load_model(d.join("fc.json")).unwrap();
    assert_eq!(fc.dims(), vec![9, 18]);
    let o = wcomp(d, &["convert-conv", "fc.json", "--back", "--template", "c.json", "--out", "back.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let back = wide_compress::conv::load_cnn(d.join("back.json")).unwrap();
    assert_eq!(back, cnn);
}

#[test]
fn sweep_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("s.json"),
        r#"{"widths": [8, 16], "trials_per_width": 1, "prunes_per_trial": 2,
            "train": {"epochs": 2},
            "data": {"synthetic": {"dim_in": 8, "dim_out": 1, "teacher_width": 8, "rows": 200, "noise_sigma": 0.05}}}"#,
    )
    .unwrap();
    let o = wcomp(d, &["sweep", "--config", "s.json", "--out", "rows.csv", "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("rows.csv")).unwrap();
    assert!(csv.starts_with("setting,width,trial,prune_rep,delta,task_metric,nnz_fraction,seed,dense_task_metric,status\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);

    let o = wcomp(d, &["report", "rows.csv", "--out", "summary.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("summary.json")).unwrap()).unwrap();
    assert!(summary.to_string().contains("wide_first"));

    std::fs::write(d.join("bad.csv"), "a,b\n1,2\n").unwrap();
    assert_eq!(wcomp(d, &["report", "bad.csv"]).status.code(), Some(2));
}

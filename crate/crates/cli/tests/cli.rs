use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn qhc_env(dir: &Path, args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qhc"));
    cmd.current_dir(dir).args(args).env_remove("QHC_SEED");
    if let Some(s) = seed_env {
        cmd.env("QHC_SEED", s);
    }
    cmd.output().expect("spawn qhc")
}

fn qhc(dir: &Path, args: &[&str]) -> Output {
    qhc_env(dir, args, None)
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = qhc(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn gen(dir: &Path, n: &str, d: &str, sep: &str, out: &str) {
    ok(dir, &["gen-data", "--n", n, "--d", d, "--sep", sep, "--seed", "3", "--out", out]);
}

const SMALL_SPLIT: [&str; 6] = ["--train-size", "120", "--folds", "2", "--fold-size", "100"];

fn with_split<'a>(args: &[&'a str]) -> Vec<&'a str> {
    [args, &SMALL_SPLIT[..]].concat()
}

#[test]
fn gen_data_writes_requested_shape_deterministically() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "4176", "16", "3", "a.csv");
    gen(dir.path(), "4176", "16", "3", "b.csv");
    let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.csv")).unwrap());
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines.len(), 4177);
    assert_eq!(lines[0].split(',').count(), 17);
    assert!(lines[0].split(',').any(|h| h == "label"));
}

#[test]
fn missing_output_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&qhc(dir.path(), &["gen-data", "--n", "10", "--d", "2"])), 2);
}

#[test]
fn qsvm_echoes_box_constant_and_writes_outputs() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "4176", "16", "3", "d.csv");
    ok(dir.path(), &["train", "qsvm", "--data", "d.csv", "--out-dir", "run"]);
    let m = json(dir.path().join("run/metrics.json"));
    let c = m["svm"]["box_constant"].as_f64().unwrap();
    assert!((c - 1.0 / (2.0 * 576.0 * 0.2)).abs() < 1e-15);
    assert_eq!(m["n_train"], 576);
    assert_eq!(m["auc"]["per_fold"].as_array().unwrap().len(), 5);
    assert_eq!(json(dir.path().join("run/model.json"))["model_type"], "svm");
    let roc = fs::read_to_string(dir.path().join("run/roc.csv")).unwrap();
    assert!(roc.lines().count() > 2);
}

#[test]
fn feature_map_dimension_mismatch_fails_before_writing() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "1000", "8", "3", "d.csv");
    let out = qhc(dir.path(), &with_split(&["train", "qsvm", "--data", "d.csv", "--out-dir", "run"]));
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("run").exists());
}

#[test]
fn vqc_writes_one_loss_row_per_epoch() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "600", "8", "3", "d.csv");
    let args = ["train", "vqc", "--data", "d.csv", "--out-dir", "run", "--train-size", "200", "--folds", "2", "--fold-size", "200"];
    ok(dir.path(), &args);
    let loss = fs::read_to_string(dir.path().join("run/loss.csv")).unwrap();
    let lines: Vec<&str> = loss.lines().collect();
    assert_eq!(lines[0], "epoch,loss");
    assert_eq!(lines.len(), 71);
    let m = json(dir.path().join("run/metrics.json"));
    assert_eq!(m["vqc"]["epochs"], 70);
    assert_eq!(json(dir.path().join("run/model.json"))["model_type"], "vqc");
}

#[test]
fn evaluate_reproduces_training_auc() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "400", "16", "3", "d.csv");
    ok(dir.path(), &with_split(&["train", "qsvm", "--data", "d.csv", "--out-dir", "run", "--seed", "5"]));
    ok(dir.path(), &with_split(&["evaluate", "--model", "run/model.json", "--data", "d.csv", "--out-dir", "ev", "--seed", "5"]));
    let trained = json(dir.path().join("run/metrics.json"));
    let evaluated = json(dir.path().join("ev/metrics.json"));
    assert_eq!(trained["auc"], evaluated["auc"]);
}

#[test]
fn evaluate_rejects_wrong_column_count() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "400", "16", "3", "d.csv");
    gen(dir.path(), "400", "8", "3", "narrow.csv");
    ok(dir.path(), &with_split(&["train", "qsvm", "--data", "d.csv", "--out-dir", "run"]));
    let out = qhc(dir.path(), &with_split(&["evaluate", "--model", "run/model.json", "--data", "narrow.csv", "--out-dir", "ev"]));
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("ev").exists());
}

#[test]
fn null_separation_scores_near_chance() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "4176", "16", "0", "d.csv");
    ok(dir.path(), &["train", "qsvm", "--data", "d.csv", "--out-dir", "run", "--seed", "11"]);
    let mean = json(dir.path().join("run/metrics.json"))["auc"]["mean"].as_f64().unwrap();
    assert!((mean - 0.5).abs() <= 0.05, "mean AUC {mean}");
}

/// 64 informative columns followed by 3 label-independent ones.
fn write_with_noise(path: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut text = String::new();
    let names: Vec<String> = (0..64).map(|j| format!("f{j}")).chain((0..3).map(|j| format!("noise{j}"))).collect();
    writeln!(text, "{},label", names.join(",")).unwrap();
    for i in 0..400 {
        let label = i % 2;
        let shift = if label == 1 { 1.0 } else { 0.0 };
        let row: Vec<String> = (0..67)
            .map(|j| {
                let signal = if j < 64 { shift } else { 0.0 };
                format!("{:.6}", signal + rng.random::<f64>())
            })
            .collect();
        writeln!(text, "{},{label}", row.join(",")).unwrap();
    }
    fs::write(path, text).unwrap();
}

fn header(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().next().unwrap().split(',').map(String::from).collect()
}

#[test]
fn auc_reduction_keeps_informative_columns() {
    let dir = TempDir::new().unwrap();
    write_with_noise(&dir.path().join("wide.csv"));
    for k in ["16", "64"] {
        let out = format!("k{k}.csv");
        ok(dir.path(), &["reduce", "--mode", "auc", "--k", k, "--input", "wide.csv", "--out", &out]);
        let cols = header(&dir.path().join(&out));
        assert_eq!(cols.len(), k.parse::<usize>().unwrap() + 1);
        assert!(cols.iter().all(|c| !c.starts_with("noise")), "{cols:?}");
    }
    let out = qhc(dir.path(), &["reduce", "--mode", "auc", "--k", "68", "--input", "wide.csv", "--out", "x.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn autoencoder_reduction_writes_latent_columns() {
    let dir = TempDir::new().unwrap();
    write_with_noise(&dir.path().join("wide.csv"));
    let args = ["reduce", "--mode", "ae", "--latent", "8", "--epochs", "3", "--input", "wide.csv", "--out", "lat.csv"];
    ok(dir.path(), &args);
    let cols = header(&dir.path().join("lat.csv"));
    let expected: Vec<String> = (0..8).map(|j| format!("z{j}")).chain(["label".to_string()]).collect();
    assert_eq!(cols, expected);
    assert!(dir.path().join("lat.ae_model.json").exists());
    assert_eq!(fs::read_to_string(dir.path().join("lat.ae_mse.csv")).unwrap().lines().count(), 4);
}

#[test]
fn kernel_dump_is_symmetric_with_unit_diagonal() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "100", "16", "3", "d.csv");
    ok(dir.path(), &["kernel-dump", "--data", "d.csv", "--rows", "10", "--out", "k.csv"]);
    let text = fs::read_to_string(dir.path().join("k.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 10);
    for i in 0..10 {
        assert!((rows[i][i] - 1.0).abs() < 1e-12);
        for j in 0..10 {
            assert!((rows[i][j] - rows[j][i]).abs() < 1e-12);
        }
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "400", "16", "3", "d.csv");
    let cfg = r#"{"seed": 8, "data": "d.csv", "svm": {"lambda": 0.5}, "split": {"train_size": 100, "n_folds": 2, "fold_size": 100}}"#;
    fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    ok(dir.path(), &["train", "qsvm", "--config", "cfg.json", "--out-dir", "run", "--lambda", "0.25"]);
    let m = json(dir.path().join("run/metrics.json"));
    assert_eq!(m["config"]["seed"], 8);
    assert_eq!(m["config"]["svm"]["lambda"], 0.25);
    assert_eq!(m["n_train"], 100);
    assert!((m["svm"]["box_constant"].as_f64().unwrap() - 1.0 / (2.0 * 100.0 * 0.25)).abs() < 1e-15);

    fs::write(dir.path().join("bad.json"), r#"{"sede": 1}"#).unwrap();
    let out = qhc(dir.path(), &["train", "qsvm", "--config", "bad.json", "--data", "d.csv", "--out-dir", "bad"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "400", "16", "3", "d.csv");
    let args = with_split(&["train", "svm", "--data", "d.csv", "--out-dir", "env"]);
    let out = qhc_env(dir.path(), &args, Some("42"));
    assert!(out.status.success());
    assert_eq!(json(dir.path().join("env/metrics.json"))["config"]["seed"], 42);

    let args = with_split(&["train", "svm", "--data", "d.csv", "--out-dir", "flag", "--seed", "7"]);
    assert!(qhc_env(dir.path(), &args, Some("42")).status.success());
    assert_eq!(json(dir.path().join("flag/metrics.json"))["config"]["seed"], 7);

    let args = with_split(&["train", "svm", "--data", "d.csv", "--out-dir", "junk"]);
    assert_eq!(code(&qhc_env(dir.path(), &args, Some("abc"))), 2);
}

//! Runs the `idsnet` binary end to end on small synthetic inputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

// a network small enough to train in well under a second per epoch
const TINY: &str = "\
# tiny network for fast runs
conv_filters = 4
gru_units = 4
num_heads = 2
key_dim = 4
dense_units = 8
epochs = 2
batch_size = 32
seed = 3
";

fn idsnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idsnet"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn idsnet")
}

fn ok(args: &[&str]) -> String {
    let out = idsnet(args);
    assert!(
        out.status.success(),
        "idsnet {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn label_counts(csv: &Path) -> Vec<(String, usize)> {
    let text = std::fs::read_to_string(csv).unwrap();
    let mut counts = std::collections::BTreeMap::new();
    for line in text.lines().skip(1) {
        *counts.entry(line.rsplit(',').next().unwrap().to_string()).or_insert(0) += 1;
    }
    counts.into_iter().collect()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture {
            dir: tempfile::tempdir().unwrap(),
        };
        std::fs::write(f.path("tiny.cfg"), TINY).unwrap();
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn gen(&self, name: &str, extra: &[&str]) -> PathBuf {
        let out = self.path(name);
        let mut args = vec![
            "gen-data",
            "--classes",
            "3",
            "--features",
            "12",
            "--per-class",
            "60",
            "--out",
            p(&out),
        ];
        args.extend_from_slice(extra);
        ok(&args);
        out
    }

    fn train(&self, data: &Path, out: &str, extra: &[&str]) -> String {
        let cfg = self.path("tiny.cfg");
        let dir = self.path(out);
        let mut args = vec!["train", "--data", p(data), "--config", p(&cfg), "--out-dir", p(&dir)];
        args.extend_from_slice(extra);
        ok(&args)
    }
}

#[test]
fn gen_data_defaults() {
    let f = Fixture::new();
    let out = f.path("d.csv");
    ok(&["gen-data", "--out", p(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 61);
    assert_eq!(header[0], "f000");
    assert_eq!(header[59], "f059");
    assert_eq!(header[60], "label");
    let counts = label_counts(&out);
    assert_eq!(counts.len(), 6);
    assert!(counts.iter().all(|(_, n)| *n == 500));
}

#[test]
fn gen_data_ratio_and_repeatability() {
    let f = Fixture::new();
    let a = f.gen("a.csv", &["--imbalance", "10:1", "--seed", "4"]);
    let b = f.gen("b.csv", &["--imbalance", "10:1", "--seed", "4"]);
    let counts: Vec<usize> = label_counts(&a).into_iter().map(|(_, n)| n).collect();
    assert_eq!(counts, vec![60, 6, 6]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = f.gen("c.csv", &["--imbalance", "10:1", "--seed", "5"]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn gen_data_rejects_bad_ratio() {
    let f = Fixture::new();
    let out = idsnet(&["gen-data", "--imbalance", "10:-1", "--out", p(&f.path("x.csv"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn train_writes_artifacts_and_is_repeatable() {
    let f = Fixture::new();
    let data = f.gen("d.csv", &[]);
    let before = std::fs::read(&data).unwrap();
    let first = f.train(&data, "run1", &[]);
    let second = f.train(&data, "run2", &[]);
    for name in ["checkpoint.json", "epochs.csv", "manifest.json"] {
        assert!(f.path("run1").join(name).is_file(), "{name} missing");
    }
    assert!(first.starts_with("checkpoint sha256 "));
    assert_eq!(first, second);
    assert_eq!(
        std::fs::read(f.path("run1/checkpoint.json")).unwrap(),
        std::fs::read(f.path("run2/checkpoint.json")).unwrap()
    );
    assert_eq!(std::fs::read(&data).unwrap(), before, "input data modified");

    let epochs = std::fs::read_to_string(f.path("run1/epochs.csv")).unwrap();
    let lines: Vec<&str> = epochs.lines().collect();
    assert_eq!(lines[0], "epoch,train_loss,train_acc,val_loss,val_acc,seconds");
    assert_eq!(lines.len(), 3);

    let m1 = json(&f.path("run1/manifest.json"));
    let m2 = json(&f.path("run2/manifest.json"));
    assert_eq!(m1["command"], "train");
    assert_eq!(m1["seed"], 3);
    assert_eq!(m1["config"], m2["config"]);
    assert_eq!(m1["dataset"], m2["dataset"]);
    assert_eq!(m1["details"]["checkpoint_sha256"], m2["details"]["checkpoint_sha256"]);
    assert_eq!(m1["details"]["smote"], true);
}

#[test]
fn no_smote_keeps_training_counts_imbalanced() {
    let f = Fixture::new();
    let data = f.gen("d.csv", &["--imbalance", "10:1"]);
    f.train(&data, "plain", &["--no-smote"]);
    let m = json(&f.path("plain/manifest.json"));
    assert_eq!(m["details"]["smote"], false);
    assert_eq!(m["details"]["synthetic_rows"], 0);
    let counts: Vec<u64> = m["details"]["train_class_counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert!(counts[0] > 5 * counts[1], "{counts:?}");

    f.train(&data, "smote", &[]);
    let m = json(&f.path("smote/manifest.json"));
    let counts = m["details"]["train_class_counts"].as_array().unwrap();
    assert!(counts.iter().all(|c| c == &counts[0]));
}

#[test]
fn eval_report_schema_and_train_at_least_test() {
    let f = Fixture::new();
    let data = f.gen("d.csv", &[]);
    let cfg = f.path("tiny.cfg");
    ok(&[
        "train", "--data", p(&data), "--config", p(&cfg), "--epochs", "6", "--out-dir", p(&f.path("run")),
    ]);
    let ckpt = f.path("run/checkpoint.json");
    let text = ok(&["eval", "--checkpoint", p(&ckpt), "--out-dir", p(&f.path("test"))]);
    assert!(text.contains("weighted avg"));
    ok(&[
        "eval", "--checkpoint", p(&ckpt), "--split", "train", "--timing-reps", "10", "--out-dir", p(&f.path("train")),
    ]);
    for name in ["report.json", "report.txt", "confusion.csv", "roc.csv", "manifest.json"] {
        assert!(f.path("test").join(name).is_file(), "{name} missing");
    }

    let r = json(&f.path("test/report.json"));
    assert_eq!(r["split"], "test");
    for key in ["weighted_avg", "macro_avg"] {
        for m in ["precision", "recall", "f1"] {
            assert!(r["report"][key][m].is_number(), "{key}.{m}");
        }
    }
    assert_eq!(r["report"]["fpr"]["per_class"].as_array().unwrap().len(), 3);
    assert!(r["report"]["fpr"]["macro_avg"].is_number());
    assert!(r["latency"]["batch_1_seconds_per_instance"].as_f64().unwrap() > 0.0);
    assert!(r["latency"]["batch_64_seconds_per_instance"].as_f64().unwrap() > 0.0);
    assert_eq!(r["auc"].as_array().unwrap().len(), 3);
    assert_eq!(r["samples"], 36);

    let train = json(&f.path("train/report.json"));
    let (tr, te) = (
        train["report"]["accuracy"].as_f64().unwrap(),
        r["report"]["accuracy"].as_f64().unwrap(),
    );
    assert!(tr >= te, "train {tr} < test {te}");

    let roc = std::fs::read_to_string(f.path("test/roc.csv")).unwrap();
    assert_eq!(roc.lines().next(), Some("class,threshold,fpr,tpr"));
}

#[test]
fn eval_rejects_width_mismatch() {
    let f = Fixture::new();
    let data = f.gen("d.csv", &[]);
    f.train(&data, "run", &["--epochs", "1"]);
    let wide = f.path("wide.csv");
    ok(&["gen-data", "--classes", "3", "--features", "13", "--per-class", "10", "--out", p(&wide)]);
    let out = idsnet(&[
        "eval",
        "--checkpoint",
        p(&f.path("run/checkpoint.json")),
        "--data",
        p(&wide),
        "--out-dir",
        p(&f.path("e")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("12") && err.contains("13"), "{err}");
}

#[test]
fn ablate_writes_ten_rows() {
    let f = Fixture::new();
    let data = f.gen("d.csv", &[]);
    let cfg = f.path("tiny.cfg");
    let dir = f.path("abl");
    let stdout = ok(&[
        "ablate", "--data", p(&data), "--config", p(&cfg), "--epochs", "1", "--timing-reps", "10", "--out-dir", p(&dir),
    ]);
    assert!(stdout.contains("10 cases, 0 failed"), "{stdout}");
    let csv = std::fs::read_to_string(dir.join("ablation.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "case,model,heads,dropout,accuracy,loss,fpr,inf_time,status");
    assert_eq!(lines.len(), 11);
    let ids: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["1", "2", "3", "4", "5", "6", "7", "8", "9", "10"]);
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));
    let rows = json(&dir.join("ablation.json"));
    assert_eq!(rows.as_array().unwrap().len(), 10);
}

#[test]
fn ablate_rejects_unknown_case() {
    let f = Fixture::new();
    let data = f.gen("d.csv", &[]);
    let out = idsnet(&["ablate", "--data", p(&data), "--cases", "1,11", "--out-dir", p(&f.path("a"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown ablation case 11"));
}

#[test]
fn config_errors_name_the_line() {
    let f = Fixture::new();
    let data = f.gen("d.csv", &[]);
    let cfg = f.path("bad.cfg");
    std::fs::write(&cfg, "epochs = 2\nheads = 4\n").unwrap();
    let out = idsnet(&["train", "--data", p(&data), "--config", p(&cfg), "--out-dir", p(&f.path("r"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("heads"), "{err}");
}

#[test]
fn missing_input_fails_with_stage_name() {
    let f = Fixture::new();
    let out = idsnet(&["train", "--data", p(&f.path("nope.csv")), "--out-dir", p(&f.path("r"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: load"), "{err}");
    assert!(!f.path("r/checkpoint.json").exists());
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ifbls::data::load_csv;
use ifbls::trainer::{fit, TrainedModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tempfile::TempDir;

fn ifbls(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ifbls"))
        .args(args)
        .current_dir(dir)
        .env_remove("IFBLS_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn blobs(dir: &Path, name: &str, n: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("x1,x2,x3,class\n");
    for i in 0..n {
        let (c, y) = if i % 2 == 0 {
            (-1.5, "neg")
        } else {
            (1.5, "pos")
        };
        let v: Vec<f64> = (0..3)
            .map(|_| c + rng.sample::<f64, _>(StandardNormal))
            .collect();
        csv.push_str(&format!("{},{},{},{y}\n", v[0], v[1], v[2]));
    }
    let path = dir.join(name);
    std::fs::write(&path, csv).unwrap();
    path
}

fn table1() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data/table1_accuracy.csv")
        .display()
        .to_string()
}

const NET: [&str; 8] = ["--m", "3", "--p", "4", "--q", "12", "--seed", "7"];

#[test]
fn train_writes_model_and_manifest() {
    let dir = TempDir::new().unwrap();
    blobs(dir.path(), "train.csv", 40, 1);
    let mut args = vec![
        "train",
        "--data",
        "train.csv",
        "--variant",
        "if-bls",
        "--out",
        "m.json",
    ];
    args.extend(NET);
    let o = ifbls(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("training accuracy"));
    let model = TrainedModel::load(&dir.path().join("m.json")).unwrap();
    assert_eq!(model.class_labels(), ["neg", "pos"]);
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("m.json.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "train");
}

#[test]
fn train_without_variant_is_usage_error() {
    let dir = TempDir::new().unwrap();
    blobs(dir.path(), "train.csv", 20, 1);
    let o = ifbls(
        &["train", "--data", "train.csv", "--out", "m.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--variant"), "{}", stderr(&o));
    assert!(!dir.path().join("m.json").exists());
}

#[test]
fn single_class_data_is_rejected() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("one.csv"), "a,b,y\n1,2,x\n3,4,x\n5,6,x\n").unwrap();
    let o = ifbls(
        &[
            "train",
            "--data",
            "one.csv",
            "--variant",
            "f-bls",
            "--out",
            "m.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(
        stderr(&o).contains("exactly two classes, found 1"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn saved_model_predicts_like_in_memory_fit() {
    let dir = TempDir::new().unwrap();
    let train = blobs(dir.path(), "train.csv", 50, 2);
    let test = blobs(dir.path(), "test.csv", 30, 3);
    let mut args = vec![
        "train",
        "--data",
        "train.csv",
        "--variant",
        "f-bls",
        "--C",
        "100",
        "--out",
        "m.json",
    ];
    args.extend(NET);
    assert_eq!(code(&ifbls(&args, dir.path())), 0);
    let o = ifbls(
        &[
            "predict",
            "--model",
            "m.json",
            "--data",
            "test.csv",
            "--drop-column",
            "class",
            "--out",
            "pred.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let saved = TrainedModel::load(&dir.path().join("m.json")).unwrap();
    let ds = load_csv(&train, None, true).unwrap();
    let fresh = fit(&ds.x, &ds.labels, saved.config()).unwrap();
    assert_eq!(fresh.output_weights(), saved.output_weights());
    let test_ds = load_csv(&test, None, true).unwrap();
    let want = fresh.predict(&test_ds.x).unwrap();
    let got = std::fs::read_to_string(dir.path().join("pred.csv")).unwrap();
    let mut lines = got.lines();
    assert_eq!(lines.next(), Some("prediction"));
    assert_eq!(lines.collect::<Vec<_>>(), want);
}

#[test]
fn feature_count_mismatch_fails() {
    let dir = TempDir::new().unwrap();
    blobs(dir.path(), "train.csv", 30, 4);
    std::fs::write(dir.path().join("narrow.csv"), "a,b\n1,2\n").unwrap();
    assert_eq!(
        code(&ifbls(
            &[
                "train",
                "--data",
                "train.csv",
                "--variant",
                "bls",
                "--out",
                "m.json"
            ],
            dir.path()
        )),
        0
    );
    let o = ifbls(
        &[
            "predict",
            "--model",
            "m.json",
            "--data",
            "narrow.csv",
            "--out",
            "p.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(
        stderr(&o).contains("input has 2 features, model expects 3"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn empty_predict_input_gives_empty_output() {
    let dir = TempDir::new().unwrap();
    blobs(dir.path(), "train.csv", 30, 5);
    std::fs::write(dir.path().join("empty.csv"), "").unwrap();
    assert_eq!(
        code(&ifbls(
            &[
                "train",
                "--data",
                "train.csv",
                "--variant",
                "bls",
                "--out",
                "m.json"
            ],
            dir.path()
        )),
        0
    );
    let o = ifbls(
        &[
            "predict",
            "--model",
            "m.json",
            "--data",
            "empty.csv",
            "--out",
            "p.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(dir.path().join("p.csv")).unwrap(),
        ""
    );
}

#[test]
fn cv_is_reproducible() {
    let dir = TempDir::new().unwrap();
    blobs(dir.path(), "d.csv", 60, 6);
    let run = |out: &str| {
        let mut args = vec![
            "cv",
            "--data",
            "d.csv",
            "--variant",
            "if-bls",
            "--k",
            "5",
            "--fold-seed",
            "11",
            "--out",
            out,
        ];
        args.extend(NET);
        let o = ifbls(&args, dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read_to_string(dir.path().join(out)).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    assert!(a.starts_with("fold,test_size,accuracy,status\n"));
    assert_eq!(a.lines().count(), 6);
}

#[test]
fn cv_with_more_folds_than_samples_fails() {
    let dir = TempDir::new().unwrap();
    blobs(dir.path(), "d.csv", 8, 7);
    let o = ifbls(
        &[
            "cv",
            "--data",
            "d.csv",
            "--variant",
            "bls",
            "--k",
            "9",
            "--out",
            "r.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(
        stderr(&o).contains("cannot split 8 samples into 9 folds"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn noise_levels_and_seeds() {
    let dir = TempDir::new().unwrap();
    blobs(dir.path(), "d.csv", 40, 8);
    let original = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    let run = |level: &str, seed: &str, out: &str| {
        ifbls(
            &[
                "noise", "--data", "d.csv", "--level", level, "--seed", seed, "--out", out,
            ],
            dir.path(),
        )
    };

    assert_eq!(code(&run("0", "1", "zero.csv")), 0);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("zero.csv")).unwrap(),
        original
    );

    assert_eq!(code(&run("30", "5", "a.csv")), 0);
    assert_eq!(code(&run("30", "5", "b.csv")), 0);
    let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(
        a,
        std::fs::read_to_string(dir.path().join("b.csv")).unwrap()
    );
    let changed = a
        .lines()
        .zip(original.lines())
        .filter(|(x, y)| x != y)
        .count();
    assert_eq!(changed, 12);
    let labels = |s: &str| {
        s.lines()
            .map(|l| l.rsplit(',').next().unwrap().to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(labels(&a), labels(&original));

    let o = run("101", "1", "bad.csv");
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("bad.csv").exists());
}

#[test]
fn stats_reproduces_published_tables() {
    let dir = TempDir::new().unwrap();
    let table = table1();
    let o = ifbls(
        &["stats", "--table", &table, "--out-dir", "out"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in [
        "ranks.csv",
        "friedman.csv",
        "wilcoxon.csv",
        "win_tie_loss.csv",
        "report.md",
        "stats.manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let ranks = std::fs::read_to_string(out.join("ranks.csv")).unwrap();
    let bank = ranks.lines().find(|l| l.starts_with("bank,")).unwrap();
    assert_eq!(bank, "bank,2,4.5,3,7,6,1,4.5");
    let wtl = std::fs::read_to_string(out.join("win_tie_loss.csv")).unwrap();
    assert!(wtl.contains("IF-BLS,BLS,21,2,5,"), "{wtl}");
    assert!(wtl.contains("F-BLS,BLS,9,5,14,"), "{wtl}");
}

#[test]
fn stats_reports_identical_columns() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("dataset,A,B,C\n");
    for i in 0..8 {
        let v = 0.5 + i as f64 / 100.0;
        csv.push_str(&format!("d{i},{v},{v},{}\n", v - 0.1));
    }
    std::fs::write(dir.path().join("t.csv"), csv).unwrap();
    let o = ifbls(
        &["stats", "--table", "t.csv", "--out-dir", "out"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let w = std::fs::read_to_string(dir.path().join("out/wilcoxon.csv")).unwrap();
    assert!(
        w.lines()
            .any(|l| l.starts_with("B,A,") && l.ends_with("no nonzero pairs")),
        "{w}"
    );
}

#[test]
fn stats_refuses_friedman_on_one_dataset() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("t.csv"), "dataset,A,B\nonly,0.9,0.8\n").unwrap();
    let o = ifbls(
        &["stats", "--table", "t.csv", "--out-dir", "out"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("needs K >= 2"), "{}", stderr(&o));
}

#[test]
fn paper_grid_dry_run_counts() {
    let dir = TempDir::new().unwrap();
    blobs(dir.path(), "d.csv", 10, 9);
    for (variant, n) in [("if-bls", "93170"), ("f-bls", "8470"), ("bls", "8470")] {
        let o = ifbls(
            &[
                "gridsearch",
                "--data",
                "d.csv",
                "--grid",
                "paper",
                "--variant",
                variant,
                "--dry-run",
            ],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(
            String::from_utf8_lossy(&o.stdout).trim(),
            format!("{n} configurations")
        );
    }
}

#[test]
fn data_dir_env_resolves_relative_paths() {
    let data = TempDir::new().unwrap();
    let work = TempDir::new().unwrap();
    blobs(data.path(), "d.csv", 20, 10);
    let o = Command::new(env!("CARGO_BIN_EXE_ifbls"))
        .args([
            "train",
            "--data",
            "d.csv",
            "--variant",
            "bls",
            "--out",
            "m.json",
        ])
        .current_dir(work.path())
        .env("IFBLS_DATA_DIR", data.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(work.path().join("m.json").exists());
}

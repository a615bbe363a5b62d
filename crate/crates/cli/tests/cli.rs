use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn condmon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condmon")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
[data]
source = "synthetic"
samples_per_class = 8
duration_s = 0.25
[cv]
n_folds = 3
[noise]
levels_db = [20]
[[models]]
kind = "knn"
k = 3
[[models]]
kind = "rf"
n_trees = 10
"#;

fn write_config(dir: &Path) -> String {
    let p = dir.join("small.toml");
    fs::write(&p, SMALL).unwrap();
    p.display().to_string()
}

#[test]
fn synth_then_extract_from_wav() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let corpus = tmp.path().join("corpus");
    let o = condmon(&["synth", "--config", &cfg, "--seed", "3", "--out", corpus.to_str().unwrap(), "--samples-per-class", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let labels = fs::read_to_string(corpus.join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 11);
    assert!(corpus.join("manifest.txt").is_file());

    let before: Vec<_> = fs::read_dir(&corpus).unwrap().map(|e| e.unwrap().path()).collect();
    let features = tmp.path().join("features.csv");
    let o = condmon(&[
        "extract", "--seed", "3", "--out", features.to_str().unwrap(), "--input", corpus.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&features).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 129);
    assert_eq!(lines.count(), 10);
    let after: Vec<_> = fs::read_dir(&corpus).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(before.len(), after.len(), "input directory must not change");
}

#[test]
fn bench_then_stats() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("run");
    let o = condmon(&["bench", "--config", &cfg, "--seed", "11", "--out", out.to_str().unwrap(), "--no-timing"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["metrics.csv", "noise.csv", "significance.csv", "manifest.txt", "predictions.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(!out.join("timing.csv").exists());

    let stats = tmp.path().join("stats");
    let o = condmon(&[
        "stats", "--predictions", out.join("predictions.csv").to_str().unwrap(), "--out", stats.to_str().unwrap(),
        "--q-alpha", "1.960",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(stats.join("ranks.csv")).unwrap(), fs::read(out.join("ranks.csv")).unwrap());
    assert!(fs::read_to_string(stats.join("friedman.csv")).unwrap().lines().nth(1).unwrap().split(',').last().unwrap() != "");
}

#[test]
fn noise_subcommand_writes_a_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("noise");
    let o = condmon(&["noise", "--config", &cfg, "--seed", "2", "--out", out.to_str().unwrap(), "--levels", "30,10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("noise.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "model,clean,snr_30db,snr_10db,robustness_index");
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn missing_seed_fails_with_config_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let o = condmon(&["bench", "--config", &cfg, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("[config]"), "{}", stderr(&o));
}

#[test]
fn empty_wav_directory_fails_with_data_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = condmon(&[
        "extract", "--seed", "1", "--out", tmp.path().join("f.csv").to_str().unwrap(), "--input", empty.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[data]"), "{}", stderr(&o));
}

#[test]
fn increasing_noise_levels_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let o = condmon(&["noise", "--config", &cfg, "--seed", "2", "--out", tmp.path().join("n").to_str().unwrap(), "--levels", "10,30"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("strictly decreasing"), "{}", stderr(&o));
}

use std::path::Path;
use std::process::{Command, Output};

use cyclosep::benchmark::{ExperimentConfig, Profile};
use cyclosep::curves::{parse_csv, parse_json, EstimatorKind};
use cyclosep::dataset::import_dataset;
use cyclosep::matrix_io::read_covariance;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclosep")).args(args).output().unwrap()
}

fn error_kind(out: &Output) -> String {
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(v["message"].is_string());
    v["error"].as_str().unwrap().to_string()
}

#[test]
fn missing_sigma_is_a_machine_readable_error() {
    let out = run(&["benchmark", "--profile", "s51", "--trials", "1"]);
    assert_eq!(error_kind(&out), "invalid_parameter");
}

#[test]
fn usage_errors_are_machine_readable() {
    assert_eq!(error_kind(&run(&["benchmark", "--profile", "s99"])), "usage");
    assert_eq!(error_kind(&run(&["frobnicate"])), "usage");
    let out = run(&["benchmark", "--sigma", "0.1", "--estimators", "wiener", "--profile", "s51"]);
    assert_eq!(error_kind(&out), "usage");
}

#[test]
fn missing_config_file_reports_io_error() {
    let out = run(&["covariance", "--config", "/nonexistent/models.json", "--out", "/tmp/never"]);
    assert_eq!(error_kind(&out), "io");
}

#[test]
fn benchmark_csv_on_stdout() {
    let out = run(&[
        "benchmark", "--profile", "s51", "--sigma", "0.2", "--trials", "2", "--estimators", "lmmse,oracle",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("estimator,sir_db,mse_db,stderr_db,trials\n"));
    assert!(!text.contains('\r'));
    let cells = parse_csv(&text).unwrap();
    assert_eq!(cells.len(), 10);
    assert!(cells.iter().all(|c| c.trials == 2));
}

#[test]
fn benchmark_json_notes_infeasible_mmse() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curves.json");
    let out = run(&[
        "benchmark",
        "--profile",
        "s52-reduced",
        "--sigma",
        "0.1",
        "--trials",
        "1",
        "--estimators",
        "oracle,mmse",
        "--memory-budget-gib",
        "0.5",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = parse_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(table.estimators(), vec![EstimatorKind::Oracle]);
    assert_eq!(table.cells.len(), 23);
    assert_eq!(table.metadata.n, 320);
    assert_eq!(table.metadata.sigma, 0.1);
    assert!(table.metadata.notices[0].contains("mmse omitted"));
}

#[test]
fn generate_writes_reusable_config_and_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("gen");
    let out = run(&[
        "generate", "--profile", "s51", "--sigma", "0.1", "--count", "7", "--seed", "3", "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = ExperimentConfig::load(out_dir.join("models.json")).unwrap();
    let mut expected = Profile::S51.config();
    expected.sigma = Some(0.1);
    assert_eq!(cfg, expected);
    let (records, meta) = import_dataset(out_dir.join("dataset.csds")).unwrap();
    assert_eq!(records.len(), 7);
    assert!(records.iter().all(|r| r.latents.is_some()));
    let meta = meta.unwrap();
    assert_eq!((meta.seed, meta.count, meta.n), (3, 7, 256));
}

#[test]
fn export_dataset_separates_training_and_test_views() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "export-dataset",
        "--profile",
        "s51",
        "--sigma",
        "0.1",
        "--train-per-level",
        "3",
        "--val-per-level",
        "1",
        "--test-per-level",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let load = |name: &str| import_dataset(dir.path().join(name)).unwrap();
    let (train, meta) = load("train.csds");
    assert_eq!(train.len(), 15);
    assert!(train.iter().all(|r| r.latents.is_none()));
    assert_eq!(meta.unwrap().split, "train");
    let (val, _) = load("val.csds");
    assert_eq!(val.len(), 5);
    assert_ne!(train[0].y, val[0].y);
    for name in ["m6", "m3", "0", "3", "6"] {
        let (test, meta) = load(&format!("test_sir_{name}.csds"));
        let meta = meta.unwrap();
        assert_eq!(meta.kappa_levels.len(), 1);
        assert_eq!(test.len(), 2);
        assert!(test.iter().all(|r| r.latents.unwrap().kappa == meta.kappa_levels[0].kappa));
    }
}

#[test]
fn covariance_dump_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["covariance", "--profile", "s51", "--tau", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = Profile::S51.config();
    let read = |name: &str| read_covariance(Path::new(dir.path()).join(name)).unwrap();
    assert_eq!(read("source_marginal.cscv"), cfg.source.marginal_covariance(256).unwrap().matrix);
    assert_eq!(read("interference_tau2.cscv"), cfg.interference.conditional_covariance(2, 256).unwrap().matrix);
    assert!(!dir.path().join("source_tau3.cscv").exists());
    let bad = run(&["covariance", "--profile", "s51", "--tau", "5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(error_kind(&bad), "offset_out_of_range");
}

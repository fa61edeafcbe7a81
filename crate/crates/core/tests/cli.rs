use std::fs;
use std::path::Path;

use qtft::cli::run;
use qtft::data_io::{read_report, PARAMS_FILE, REPORT_FILE};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/axisbank_2000_reconstructed.csv");

fn exec(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("qtft").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn train_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["train", "--data", DATA, "--out", out];
    v.extend_from_slice(extra);
    v
}

#[test]
fn train_then_eval_matches_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, _) = exec(&train_args(out, &["--model", "tft", "--epochs", "20", "--seed", "7"]));
    assert_eq!(code, 0);
    assert!(stdout.contains("test loss"));
    let report = read_report(dir.path()).unwrap();
    assert_eq!(report.loss_history.mean.len(), 21);
    assert_eq!(report.predictions.len(), (17 + 4) * 2);

    let params = dir.path().join(PARAMS_FILE);
    let eval = ["eval", "--data", DATA, "--model", "tft", "--seed", "7", "--params", params.to_str().unwrap()];
    let (code, stdout, _) = exec(&eval);
    assert_eq!(code, 0);
    let loss: f64 = stdout.trim().strip_prefix("loss ").unwrap().parse().unwrap();
    assert_eq!(loss, report.test_loss);
    assert_eq!(exec(&eval).1, stdout);
}

#[test]
fn zero_epochs_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(exec(&train_args(out, &["--epochs", "0"])).0, 0);
    assert_eq!(read_report(dir.path()).unwrap().loss_history.mean.len(), 1);
}

#[test]
fn validation_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let out = out.to_str().unwrap();
    for extra in [
        &["--quantile", "1.5"][..],
        &["--model", "lstm"],
        &["--train-range", "0:25"],
        &["--encoding", "amplitude"],
        &["--epochs", "ten"],
    ] {
        let (code, _, err) = exec(&train_args(out, extra));
        assert_eq!(code, 2, "{extra:?}: {err}");
    }
    assert!(!Path::new(out).exists());
    assert_eq!(exec(&["frobnicate"]).0, 2);
    assert_eq!(exec(&["--help"]).0, 0);
}

#[test]
fn runtime_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = exec(&["train", "--data", "/missing.csv", "--out", out]);
    assert_eq!(code, 1);
    assert!(err.contains("missing.csv"));
    let (code, _, _) = exec(&["eval", "--data", DATA, "--params", "/missing/params.txt"]);
    assert_eq!(code, 1);
}

#[test]
fn report_echoes_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    exec(&train_args(out, &["--epochs", "1", "--lr", "0.05"]));
    let text = fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
    for key in ["model = tft", "learning_rate = 0.05", "quantile = 0.5", "train_range = 0:19", "seed = 7"] {
        assert!(text.contains(key), "{key}");
    }
}

#[test]
fn gradcheck_detects_injected_fault() {
    let (code, stdout, _) = exec(&["gradcheck"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("runtime"));
    let (code, stdout, _) = exec(&["gradcheck", "--inject-fault"]);
    assert_eq!(code, 1);
    assert!(stdout.contains("FAIL"));
}

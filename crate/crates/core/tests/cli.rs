//! End-to-end command-line tests against the committed fixture corpus.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qser() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qser"));
    cmd.env_remove("QSER_SEED");
    cmd
}

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("spawn qser");
    assert!(
        output.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn preprocess_into(dir: &Path) {
    run_ok(qser()
        .arg("preprocess")
        .arg("--corpus")
        .arg(corpus())
        .args(["--labeler", "folder", "--out"])
        .arg(dir));
}

#[test]
fn full_pipeline_preprocess_train_eval_predict() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_into(dir.path());
    let manifest = dir.path().join("manifest.txt");
    assert!(manifest.exists());

    // enough epochs to memorize the trivially separable two-tone corpus
    let ckpt = dir.path().join("model.qser");
    let out = run_ok(qser()
        .arg("train")
        .arg("--manifest")
        .arg(&manifest)
        .arg("--out")
        .arg(&ckpt)
        .args(["--epochs", "20", "--batch-size", "4", "--seed", "7"]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("config:"), "config echo line missing");
    assert!(stdout.contains("parameters: conv1 576"));
    let metric_lines: Vec<&str> = stdout
        .lines()
        .filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit()))
        .collect();
    assert_eq!(metric_lines.len(), 20, "one metrics line per epoch");
    assert!(ckpt.exists());
    assert!(dir.path().join("model.best.qser").exists());
    let metrics_file = std::fs::read_to_string(dir.path().join("model.metrics.csv")).unwrap();
    assert_eq!(metrics_file.lines().count(), 20);
    for (a, b) in metrics_file.lines().zip(&metric_lines) {
        assert_eq!(&a, b, "metrics file and stdout must agree");
    }

    // eval on the train split prints an accuracy report
    let out = run_ok(qser()
        .arg("eval")
        .arg("--checkpoint")
        .arg(&ckpt)
        .arg("--manifest")
        .arg(&manifest)
        .args(["--split", "train"]));
    let eval_text = String::from_utf8_lossy(&out.stdout);
    assert!(eval_text.contains("accuracy:"));
    assert!(eval_text.contains("confusion matrix"));

    // the last logged train accuracy matches an eval over the train split
    let last_train_acc: f64 = metric_lines
        .last()
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    // dropout is off at eval; require memorization so the two readings agree
    assert!(
        last_train_acc >= 0.95,
        "training did not memorize: {last_train_acc}"
    );
    let eval_acc: f64 = eval_text
        .lines()
        .find(|l| l.starts_with("accuracy:"))
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(eval_acc >= 0.95, "eval accuracy {eval_acc}");

    // json report parses and sums to the sample count
    let out = run_ok(qser()
        .arg("eval")
        .arg("--checkpoint")
        .arg(&ckpt)
        .arg("--manifest")
        .arg(&manifest)
        .args(["--split", "test", "--json"]));
    let parsed: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("eval --json must emit valid JSON");
    assert_eq!(parsed["split"], "test");
    assert_eq!(parsed["sample_count"], 2);
    assert!(parsed["accuracy"].as_f64().is_some());

    // predict: every training wav classifies as its own label
    let out = run_ok(qser()
        .arg("predict")
        .arg("--checkpoint")
        .arg(&ckpt)
        .arg(corpus().join("angry/tone0.wav"))
        .arg(corpus().join("calm/tone1.wav")));
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("angry"), "line: {}", lines[0]);
    assert!(lines[1].contains("calm"), "line: {}", lines[1]);
    // probability vector parses and sums to 1
    let probs: Vec<f64> = lines[0]
        .split('\t')
        .nth(2)
        .unwrap()
        .split(',')
        .map(|p| p.parse().unwrap())
        .collect();
    assert_eq!(probs.len(), 2);
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-3);
}

#[test]
fn preprocess_then_zero_epoch_train_keeps_initial_weights() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_into(dir.path());
    let ckpt = dir.path().join("init.qser");
    let out = run_ok(qser()
        .arg("train")
        .arg("--manifest")
        .arg(dir.path().join("manifest.txt"))
        .arg("--out")
        .arg(&ckpt)
        .args(["--epochs", "0", "--seed", "5"]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let metric_lines = stdout
        .lines()
        .filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit()))
        .count();
    assert_eq!(metric_lines, 0, "no metric lines for --epochs 0");
    assert!(std::fs::read_to_string(dir.path().join("init.metrics.csv"))
        .unwrap()
        .is_empty());

    // the checkpoint holds exactly the seeded initial weights
    let loaded = qser_core::checkpoint::Checkpoint::load(&ckpt).unwrap();
    let spec = qser_core::model::ModelSpec::with_classes(2);
    let initial = qser_core::model::QcnnModel::init(&spec, 5).unwrap();
    assert_eq!(loaded.model, initial);
}

#[test]
fn missing_corpus_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let output = qser()
        .arg("preprocess")
        .arg("--corpus")
        .arg(dir.path().join("nope"))
        .args(["--labeler", "folder", "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("error:"));
}

#[test]
fn mismatched_feature_config_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_into(dir.path());
    // train with a different feature config: fingerprints must clash
    let cfg_file = dir.path().join("other.cfg");
    std::fs::write(&cfg_file, "feature.n_mels=64\n").unwrap();
    let output = qser()
        .arg("train")
        .arg("--manifest")
        .arg(dir.path().join("manifest.txt"))
        .arg("--out")
        .arg(dir.path().join("m.qser"))
        .arg("--config")
        .arg(&cfg_file)
        .args(["--epochs", "1"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&output.stderr).contains("feature"));
}

#[test]
fn flags_beat_config_file_and_env_seeds() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_into(dir.path());
    let cfg_file = dir.path().join("run.cfg");
    std::fs::write(&cfg_file, "train.epochs=5\ntrain.seed=100\n").unwrap();

    // --epochs 1 beats the file's 5; --seed beats file and env
    let out = run_ok(qser()
        .arg("train")
        .arg("--manifest")
        .arg(dir.path().join("manifest.txt"))
        .arg("--out")
        .arg(dir.path().join("m.qser"))
        .arg("--config")
        .arg(&cfg_file)
        .args(["--epochs", "1", "--seed", "3"])
        .env("QSER_SEED", "999"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let echo = stdout.lines().find(|l| l.starts_with("config:")).unwrap();
    assert!(echo.contains("train.epochs=1"), "{echo}");
    assert!(echo.contains("train.seed=3"), "{echo}");

    // without a flag, the file seed wins over the environment
    let out = run_ok(qser()
        .arg("train")
        .arg("--manifest")
        .arg(dir.path().join("manifest.txt"))
        .arg("--out")
        .arg(dir.path().join("m2.qser"))
        .arg("--config")
        .arg(&cfg_file)
        .args(["--epochs", "0"])
        .env("QSER_SEED", "999"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("train.seed=100"));

    // with neither flag nor file, the environment seed applies
    let out = run_ok(qser()
        .arg("train")
        .arg("--manifest")
        .arg(dir.path().join("manifest.txt"))
        .arg("--out")
        .arg(dir.path().join("m3.qser"))
        .args(["--epochs", "0"])
        .env("QSER_SEED", "999"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("train.seed=999"));
}

#[test]
fn same_seed_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_into(dir.path());
    let run = |out_name: &str| -> (Vec<u8>, String) {
        let ckpt = dir.path().join(out_name);
        let out = run_ok(qser()
            .arg("train")
            .arg("--manifest")
            .arg(dir.path().join("manifest.txt"))
            .arg("--out")
            .arg(&ckpt)
            .args(["--epochs", "3", "--seed", "11"]));
        // keep only the path-independent lines (config echo + metrics)
        let log = String::from_utf8_lossy(&out.stdout)
            .lines()
            .filter(|l| !l.starts_with("wrote "))
            .collect::<Vec<_>>()
            .join("\n");
        (std::fs::read(&ckpt).unwrap(), log)
    };
    let (ckpt_a, log_a) = run("a.qser");
    let (ckpt_b, log_b) = run("b.qser");
    assert_eq!(ckpt_a, ckpt_b, "checkpoint bytes differ between identical runs");
    assert_eq!(log_a, log_b, "logs differ between identical runs");
}

#[test]
fn predict_silence_yields_a_distribution() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_into(dir.path());
    let ckpt = dir.path().join("m.qser");
    run_ok(qser()
        .arg("train")
        .arg("--manifest")
        .arg(dir.path().join("manifest.txt"))
        .arg("--out")
        .arg(&ckpt)
        .args(["--epochs", "0"]));

    let silent = dir.path().join("silent.wav");
    qser_core::wav::write_wav_mono_16(&silent, &vec![0.0; 8000], 8000).unwrap();
    let out = run_ok(qser().arg("predict").arg("--checkpoint").arg(&ckpt).arg(&silent));
    let text = String::from_utf8_lossy(&out.stdout);
    let probs: Vec<f64> = text
        .trim()
        .split('\t')
        .nth(2)
        .unwrap()
        .split(',')
        .map(|p| p.parse().unwrap())
        .collect();
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-3);
    assert!(probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
}

#[test]
fn predict_broken_inputs() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_into(dir.path());
    let ckpt = dir.path().join("m.qser");
    run_ok(qser()
        .arg("train")
        .arg("--manifest")
        .arg(dir.path().join("manifest.txt"))
        .arg("--out")
        .arg(&ckpt)
        .args(["--epochs", "0"]));

    let broken = dir.path().join("broken.wav");
    std::fs::write(&broken, b"not audio").unwrap();

    // all inputs failing → data exit code
    let output = qser()
        .arg("predict")
        .arg("--checkpoint")
        .arg(&ckpt)
        .arg(&broken)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    // one good input keeps the run alive with a per-file error line
    let output = qser()
        .arg("predict")
        .arg("--checkpoint")
        .arg(&ckpt)
        .arg(&broken)
        .arg(corpus().join("calm/tone0.wav"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&output.stderr).contains("broken.wav"));
    assert_eq!(String::from_utf8_lossy(&output.stdout).lines().count(), 1);
}

#[test]
fn inspect_recognizes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_into(dir.path());
    let manifest = dir.path().join("manifest.txt");
    let ckpt = dir.path().join("m.qser");
    run_ok(qser()
        .arg("train")
        .arg("--manifest")
        .arg(&manifest)
        .arg("--out")
        .arg(&ckpt)
        .args(["--epochs", "0"]));

    let out = run_ok(qser().arg("inspect").arg(&manifest));
    assert!(String::from_utf8_lossy(&out.stdout).contains("label angry: 3 train / 1 test"));

    let out = run_ok(qser().arg("inspect").arg(&ckpt));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("labels: angry, calm"));
    assert!(text.contains("parameters:"));

    let qimg = dir.path().join("features/0000_angry_tone0.qimg");
    let out = run_ok(qser().arg("inspect").arg(&qimg));
    assert!(String::from_utf8_lossy(&out.stdout).contains("50x75x1"));

    let bogus = dir.path().join("bogus.bin");
    std::fs::write(&bogus, b"???").unwrap();
    let output = qser().arg("inspect").arg(&bogus).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn png_previews_are_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(qser()
        .arg("preprocess")
        .arg("--corpus")
        .arg(corpus())
        .args(["--labeler", "folder", "--png", "--out"])
        .arg(dir.path()));
    let png = dir.path().join("features/0000_angry_tone0.png");
    let bytes = std::fs::read(&png).expect("png preview exists");
    assert_eq!(&bytes[1..4], b"PNG");
}

#[test]
fn ravdess_labeler_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("rav");
    std::fs::create_dir_all(&corpus_dir).unwrap();
    // two emotions, two files each, RAVDESS-coded names
    for (code, idx) in [("05", 1), ("05", 2), ("03", 1), ("03", 2)] {
        let name = format!("03-01-{code}-01-01-0{idx}-12.wav");
        let samples: Vec<f64> = (0..4000)
            .map(|t| 0.5 * (t as f64 * 0.08 * idx as f64).sin())
            .collect();
        qser_core::wav::write_wav_mono_16(&corpus_dir.join(name), &samples, 8000).unwrap();
    }
    let out_dir = dir.path().join("out");
    run_ok(qser()
        .arg("preprocess")
        .arg("--corpus")
        .arg(&corpus_dir)
        .args(["--labeler", "ravdess", "--out"])
        .arg(&out_dir));
    let manifest =
        qser_core::dataset::DatasetManifest::load(&out_dir.join("manifest.txt")).unwrap();
    assert_eq!(manifest.labels, vec!["angry", "happy"]);
    assert_eq!(manifest.records.len(), 4);
}

#[test]
fn help_and_unknown_flags() {
    for sub in ["preprocess", "train", "eval", "predict", "inspect", "fixture"] {
        let output = qser().arg(sub).arg("--help").output().unwrap();
        assert!(output.status.success(), "{sub} --help failed");
        assert!(!output.stdout.is_empty());
    }
    let output = qser().args(["train", "--bogus-flag"]).output().unwrap();
    assert!(!output.status.success());
    // zero input files for predict is a usage error
    let output = qser().args(["predict", "--checkpoint", "x.qser"]).output().unwrap();
    assert!(!output.status.success());
}

#[test]
fn fixture_subcommand_generates_both_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let wavs = dir.path().join("wavs");
    run_ok(qser().args(["fixture", "--kind", "wav-corpus", "--out"]).arg(&wavs));
    assert!(wavs.join("calm/tone0.wav").exists());
    assert!(wavs.join("angry/tone3.wav").exists());

    let spect = dir.path().join("spect");
    run_ok(qser().args(["fixture", "--kind", "spectrograms", "--out"]).arg(&spect));
    let manifest = qser_core::dataset::DatasetManifest::load(&spect.join("manifest.txt")).unwrap();
    assert_eq!(manifest.records.len(), 60);
}

//! End-to-end exercises of the `sttcl` binary: the full
//! synth → preprocess → train → evaluate → plot-data → inspect pipeline,
//! exit codes, and reproducibility of artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn sttcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sttcl"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed: stdout={} stderr={}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn help_exits_zero_with_usage() {
    let out = sttcl(&["train", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Usage"), "help text was: {text}");
    assert!(text.contains("--curriculum"));
}

#[test]
fn unknown_flags_and_subcommands_exit_one() {
    let out = sttcl(&["train", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let out = sttcl(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let out = sttcl(&[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn full_pipeline_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    let segb = dir.path().join("features.segb");
    let run = dir.path().join("run");

    let out = sttcl(&[
        "synth",
        "--out",
        raw.to_str().unwrap(),
        "--classes",
        "2",
        "--channels",
        "4",
        "--rate",
        "128",
        "--trials-per-class",
        "5",
        "--trial-seconds",
        "3",
        "--seed",
        "7",
    ]);
    assert_ok(&out, "synth");
    assert!(raw.join("trial_000.eegr").exists());
    assert!(raw.join("manifest.txt").exists());

    let out = sttcl(&["preprocess", raw.to_str().unwrap(), "--out", segb.to_str().unwrap()]);
    assert_ok(&out, "preprocess");
    assert!(segb.exists());

    let out = sttcl(&[
        "train",
        "--data",
        segb.to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
        "--epochs",
        "2",
        "--layers",
        "1",
        "--folds",
        "2",
        "--seed",
        "7",
        "--curriculum",
        "on",
    ]);
    assert_ok(&out, "train");
    for artifact in [
        "manifest.txt",
        "report.txt",
        "model_fold0.sttc",
        "model_fold1.sttc",
        "train_fold0.csv",
        "curriculum_fold0.csv",
    ] {
        assert!(run.join(artifact).exists(), "missing artifact {artifact}");
    }

    let out = sttcl(&[
        "evaluate",
        "--model",
        run.join("model_fold0.sttc").to_str().unwrap(),
        "--data",
        segb.to_str().unwrap(),
    ]);
    assert_ok(&out, "evaluate");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("accuracy="), "evaluate output: {text}");

    let plot = dir.path().join("tidy.csv");
    let out = sttcl(&["plot-data", run.to_str().unwrap(), "--out", plot.to_str().unwrap()]);
    assert_ok(&out, "plot-data");
    let tidy = std::fs::read_to_string(&plot).unwrap();
    assert!(tidy.starts_with("run,series,epoch,key,value"));
    assert!(tidy.contains(",manifest,0,layers,1"));
    assert!(tidy.contains("curriculum_fold0"));
    assert!(tidy.contains("hist_0"));

    let out = sttcl(&[
        "inspect",
        segb.to_str().unwrap(),
        run.join("model_fold0.sttc").to_str().unwrap(),
        raw.join("trial_000.eegr").to_str().unwrap(),
    ]);
    assert_ok(&out, "inspect");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("SEGB"));
    assert!(text.contains("STTC"));
    assert!(text.contains("EEGR"));
}

#[test]
fn evaluate_rejects_class_mismatch_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let raw2 = dir.path().join("raw2");
    let raw3 = dir.path().join("raw3");
    let segb2 = dir.path().join("two.segb");
    let segb3 = dir.path().join("three.segb");
    let run = dir.path().join("run");

    for (raw, classes, channels) in [(&raw2, "2", "4"), (&raw3, "3", "6")] {
        let out = sttcl(&[
            "synth",
            "--out",
            raw.to_str().unwrap(),
            "--classes",
            classes,
            "--channels",
            channels,
            "--rate",
            "128",
            "--trials-per-class",
            "4",
            "--trial-seconds",
            "3",
        ]);
        assert_ok(&out, "synth");
    }
    for (raw, segb) in [(&raw2, &segb2), (&raw3, &segb3)] {
        let out = sttcl(&["preprocess", raw.to_str().unwrap(), "--out", segb.to_str().unwrap()]);
        assert_ok(&out, "preprocess");
    }
    let out = sttcl(&[
        "train",
        "--data",
        segb2.to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
        "--epochs",
        "1",
        "--layers",
        "1",
        "--folds",
        "2",
    ]);
    assert_ok(&out, "train");

    let out = sttcl(&[
        "evaluate",
        "--model",
        run.join("model_fold0.sttc").to_str().unwrap(),
        "--data",
        segb3.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "class mismatch must exit 2");
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("classes"), "stderr was: {text}");
}

#[test]
fn csv_ingestion_with_sidecar_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trial.csv");
    let meta = dir.path().join("trial.meta");
    // 4 seconds at 128 Hz, 2 channels, simple tones
    let mut text = String::from("time,ch0,ch1\n");
    for t in 0..512 {
        let ts = t as f64 / 128.0;
        text.push_str(&format!(
            "{ts},{},{}\n",
            (2.0 * std::f64::consts::PI * 10.0 * ts).sin(),
            (2.0 * std::f64::consts::PI * 6.0 * ts).sin()
        ));
    }
    std::fs::write(&csv, text).unwrap();
    std::fs::write(&meta, "sample-rate=128\ntrial-id=0\nlabel=0\n").unwrap();

    let segb = dir.path().join("from_csv.segb");
    let out = sttcl(&[
        "preprocess",
        csv.to_str().unwrap(),
        "--out",
        segb.to_str().unwrap(),
        "--classes",
        "2",
    ]);
    assert_ok(&out, "preprocess csv");
    assert!(csv.with_extension("eegr").exists(), "validated binary form is written");
    assert!(segb.exists());

    // missing sidecar is a validation error
    let lonely = dir.path().join("lonely.csv");
    std::fs::write(&lonely, "time,ch0\n0.0,1.0\n").unwrap();
    let out = sttcl(&[
        "preprocess",
        lonely.to_str().unwrap(),
        "--out",
        dir.path().join("x.segb").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_with_the_same_seed_reproduce_artifacts_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let mk = |tag: &str| -> (Vec<u8>, Vec<u8>, String) {
        let raw = dir.path().join(format!("raw_{tag}"));
        let segb = dir.path().join(format!("{tag}.segb"));
        let run = dir.path().join(format!("run_{tag}"));
        assert_ok(
            &sttcl(&[
                "synth",
                "--out",
                raw.to_str().unwrap(),
                "--classes",
                "2",
                "--channels",
                "4",
                "--rate",
                "128",
                "--trials-per-class",
                "4",
                "--trial-seconds",
                "3",
                "--seed",
                "11",
            ]),
            "synth",
        );
        assert_ok(
            &sttcl(&["preprocess", raw.to_str().unwrap(), "--out", segb.to_str().unwrap()]),
            "preprocess",
        );
        assert_ok(
            &sttcl(&[
                "train",
                "--data",
                segb.to_str().unwrap(),
                "--out",
                run.to_str().unwrap(),
                "--epochs",
                "2",
                "--layers",
                "1",
                "--folds",
                "2",
                "--seed",
                "11",
            ]),
            "train",
        );
        (
            std::fs::read(raw.join("trial_000.eegr")).unwrap(),
            std::fs::read(&segb).unwrap(),
            std::fs::read_to_string(run.join("report.txt")).unwrap(),
        )
    };
    let (raw_a, segb_a, report_a) = mk("a");
    let (raw_b, segb_b, report_b) = mk("b");
    assert_eq!(raw_a, raw_b, "synthetic recordings must be byte-identical");
    assert_eq!(segb_a, segb_b, "SEGB files must be byte-identical");
    assert_eq!(report_a, report_b, "metric reports must be identical");
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "classes=2\nchannels=4\nrate=128\ntrials-per-class=3\ntrial-seconds=3\nseed=5\n")
        .unwrap();
    let raw = dir.path().join("raw");
    let out = sttcl(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        raw.to_str().unwrap(),
        "--trials-per-class",
        "2",
    ]);
    assert_ok(&out, "synth with config");
    // 2 classes × 2 trials (flag overrides the file's 3)
    let count = std::fs::read_dir(&raw)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "eegr"))
        .count();
    assert_eq!(count, 4);
    assert!(Path::new(&raw).join("manifest.txt").exists());
}

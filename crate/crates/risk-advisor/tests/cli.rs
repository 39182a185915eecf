//! End-to-end tests for the experiment runner and the command-line binary.

use std::path::Path;
use std::process::Command;

use risk_advisor::cli::{run_scenario, DatasetSpec, ExperimentConfig};
use risk_advisor::sgbt::SgbtParams;

fn tiny_config(out: &Path) -> ExperimentConfig {
    serde_json::from_value(serde_json::json!({
        "dataset": {"kind": "circles", "n": 200, "noise_sd": 0.08, "train_fraction": 0.7},
        "bbox": {"kind": "logistic", "l2": 1e-4, "epochs": 100, "lr": 0.1},
        "advisor": {
            "n_trees": 20, "max_depth": 3, "learning_rate": 0.1,
            "sample_rate": 0.5, "min_samples_leaf": 5, "seed": 0
        },
        "members": 3,
        "seed": 11,
        "output_dir": out.display().to_string(),
    }))
    .unwrap()
}

#[test]
fn run_scenario_writes_complete_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let manifest = run_scenario(&tiny_config(&out)).unwrap();

    for name in [
        "train.csv",
        "test.csv",
        "bbox.json",
        "advisor.json",
        "report.csv",
        "metrics.json",
        "manifest.json",
    ] {
        assert!(out.join(name).exists(), "missing artifact {name}");
    }
    // the manifest lists every artifact, including itself
    assert_eq!(manifest.seed_list, vec![11]);
    assert_eq!(manifest.artifact_paths.len(), 7);
    for p in &manifest.artifact_paths {
        assert!(Path::new(p).exists(), "manifest points at missing file {p}");
    }
    assert!(!manifest.tool_version.is_empty());
}

#[test]
fn rerunning_same_config_gives_byte_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let mut cfg = tiny_config(&a);
    run_scenario(&cfg).unwrap();
    cfg.output_dir = b.display().to_string();
    run_scenario(&cfg).unwrap();
    assert_eq!(
        std::fs::read(a.join("metrics.json")).unwrap(),
        std::fs::read(b.join("metrics.json")).unwrap()
    );
}

#[test]
fn repeats_aggregate_mean_and_sd() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let mut cfg = tiny_config(&out);
    cfg.repeats = 3;
    let manifest = run_scenario(&cfg).unwrap();
    assert_eq!(manifest.seed_list, vec![11, 12, 13]);

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["repeats"].as_array().unwrap().len(), 3);
    let mean = metrics["mean"].as_object().unwrap();
    let sd = metrics["sd"].as_object().unwrap();
    assert!(mean.contains_key("auroc_error_prob"));
    assert_eq!(mean.len(), sd.len());
    for (k, v) in sd {
        assert!(v.as_f64().unwrap() >= 0.0, "negative sd for {k}");
    }
    assert!(out.join("repeat_0/report.csv").exists());
    assert!(out.join("repeat_2/report.csv").exists());
}

#[test]
fn failed_run_removes_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    // a test set whose width disagrees with the training set passes loading
    // but fails when the trained black box scores it, after the datasets and
    // model files are already on disk
    let train_csv = dir.path().join("in_train.csv");
    let test_csv = dir.path().join("in_test.csv");
    std::fs::write(
        &train_csv,
        "x,y,label\n0,0,0\n1,0,1\n0,1,0\n1,1,1\n0.2,0.1,0\n0.9,0.8,1\n",
    )
    .unwrap();
    std::fs::write(&test_csv, "x,y,z,label\n0,0,0,0\n1,1,1,1\n").unwrap();
    let mut cfg = tiny_config(&out);
    cfg.dataset = DatasetSpec::Csv {
        train_path: train_csv.display().to_string(),
        test_path: test_csv.display().to_string(),
        label_column: "label".into(),
        ood_column: None,
    };
    assert!(run_scenario(&cfg).is_err());
    assert!(!out.join("train.csv").exists());
    assert!(!out.join("test.csv").exists());
    assert!(!out.join("metrics.json").exists());
}

#[test]
fn invalid_config_is_rejected_before_any_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let mut cfg = tiny_config(&out);
    cfg.members = 0;
    assert!(run_scenario(&cfg).is_err());
    assert!(!out.exists() || std::fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn persisted_config_reruns_to_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let cfg = tiny_config(&out);
    run_scenario(&cfg).unwrap();

    // round-trip the config through the manifest, as a re-run would
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let restored: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    let out2 = dir.path().join("exp2");
    let restored = ExperimentConfig {
        output_dir: out2.display().to_string(),
        ..restored
    };
    run_scenario(&restored).unwrap();
    for name in ["train.csv", "test.csv", "report.csv", "metrics.json"] {
        assert_eq!(
            std::fs::read(out.join(name)).unwrap(),
            std::fs::read(out2.join(name)).unwrap(),
            "artifact {name} differs on re-run"
        );
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_risk-advisor"))
}

#[test]
fn binary_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).display().to_string();

    let steps: Vec<Vec<String>> = vec![
        vec![
            "generate".into(),
            "--dataset".into(),
            "circles".into(),
            "--n".into(),
            "200".into(),
            "--seed".into(),
            "5".into(),
            "--out-train".into(),
            p("train.csv"),
            "--out-test".into(),
            p("test.csv"),
        ],
        vec![
            "train-bbox".into(),
            "--train".into(),
            p("train.csv"),
            "--out".into(),
            p("bbox.json"),
        ],
        vec![
            "train-advisor".into(),
            "--train".into(),
            p("train.csv"),
            "--bbox".into(),
            p("bbox.json"),
            "--n-trees".into(),
            "20".into(),
            "--members".into(),
            "3".into(),
            "--out".into(),
            p("advisor.json"),
        ],
        vec![
            "score".into(),
            "--advisor".into(),
            p("advisor.json"),
            "--data".into(),
            p("test.csv"),
            "--out".into(),
            p("report.csv"),
        ],
        vec![
            "eval".into(),
            "--report".into(),
            p("report.csv"),
            "--bbox".into(),
            p("bbox.json"),
            "--data".into(),
            p("test.csv"),
            "--out".into(),
            p("metrics.json"),
        ],
        vec![
            "abstain-eval".into(),
            "--report".into(),
            p("report.csv"),
            "--bbox".into(),
            p("bbox.json"),
            "--data".into(),
            p("test.csv"),
            "--out-curve".into(),
            p("ar.csv"),
            "--out".into(),
            p("prr.json"),
        ],
    ];
    for args in steps {
        let output = bin().args(&args).output().unwrap();
        assert!(
            output.status.success(),
            "step {:?} failed: {}",
            args[0],
            String::from_utf8_lossy(&output.stderr)
        );
    }

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap())
            .unwrap();
    for key in ["auroc_error_prob", "auroc_risk_score", "prr_risk_score"] {
        assert!(metrics.get(key).is_some(), "missing metric {key}");
    }
    let ar = std::fs::read_to_string(dir.path().join("ar.csv")).unwrap();
    assert!(ar.starts_with("rejection_fraction,accuracy\n"));
    // default step 0.05: header plus 21 curve points
    assert_eq!(ar.lines().count(), 22);
}

#[test]
fn binary_grid_row_count_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).display().to_string();

    // build a tiny advisor via the library, then exercise the grid subcommand
    let features: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 6) as f64, (i / 6) as f64]).collect();
    let targets: Vec<bool> = (0..30).map(|i| i % 4 == 0).collect();
    let params = SgbtParams {
        n_trees: 10,
        seed: 1,
        ..SgbtParams::default()
    };
    let advisor =
        risk_advisor::advisor::fit_advisor(&features, &targets, &params, 2, Default::default())
            .unwrap();
    risk_advisor::advisor::save_advisor(&advisor, dir.path().join("advisor.json")).unwrap();

    let output = bin()
        .args([
            "grid",
            "--kind",
            "epistemic",
            "--advisor",
            &p("advisor.json"),
            "--bounds",
            "0,5,0,4",
            "--resolution",
            "3",
            "--out",
            &p("grid.csv"),
            "--svg",
            &p("grid.svg"),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let grid = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 10, "header plus 3x3 lattice");
    assert!(std::fs::read_to_string(dir.path().join("grid.svg"))
        .unwrap()
        .starts_with("<svg"));

    // config errors exit 2 with machine-readable JSON on stderr
    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    let output = bin()
        .args(["run", "--config", &p("bad.json")])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&output.stderr).trim()).unwrap();
    assert_eq!(err["error"]["exit_code"], 2);

    // missing data files exit 3
    let output = bin()
        .args([
            "score",
            "--advisor",
            &p("advisor.json"),
            "--data",
            &p("missing.csv"),
            "--out",
            &p("r.csv"),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn dataset_spec_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = DatasetSpec::Moons {
        n: 120,
        noise_sd: 0.1,
        train_fraction: 0.5,
    }
    .realize(9)
    .unwrap();
    let tp = dir.path().join("train.csv");
    let ep = dir.path().join("test.csv");
    risk_advisor::datagen::save_csv(&train, &tp).unwrap();
    risk_advisor::datagen::save_csv(&test, &ep).unwrap();

    let spec = DatasetSpec::Csv {
        train_path: tp.display().to_string(),
        test_path: ep.display().to_string(),
        label_column: "label".into(),
        ood_column: None,
    };
    let (train2, test2) = spec.realize(0).unwrap();
    assert_eq!(train.features, train2.features);
    assert_eq!(train.labels, train2.labels);
    assert_eq!(test.features, test2.features);
}

//! End-to-end tests of the `spgrl` binary: flag validation, exit codes,
//! artifact schemas, and the sweep/train equivalences.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_spgrl")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn spgrl")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spgrl_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Small, fast instance shared by the tests below.
fn tiny_train_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "train",
        "--synth",
        "sbm",
        "--classes",
        "3",
        "--per-class",
        "20",
        "--feat-dim",
        "6",
        "--epochs",
        "25",
        "--hidden1",
        "16",
        "--hidden2",
        "8",
        "--lpc",
        "3",
        "--seed",
        "5",
        "--out",
        out,
    ];
    args.extend_from_slice(extra);
    args
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_command_is_a_usage_error() {
    let out = run(&["trian"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_features_with_edges_is_a_usage_error() {
    let out = run(&["train", "--edges", "edges.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--features"), "{stderr}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["train", "--synth", "sbm", "--bogus", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_variant_is_a_usage_error() {
    let out = run(&["train", "--synth", "sbm", "--variant", "spgrl9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_dataset_file_is_a_runtime_error() {
    let out = run(&[
        "train",
        "--features",
        "/nonexistent/f.txt",
        "--edges",
        "/nonexistent/e.txt",
        "--labels",
        "/nonexistent/l.txt",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_writes_all_artifacts_with_schema() {
    let dir = temp_dir("artifacts");
    let out_dir = dir.join("run");
    let out_str = out_dir.to_str().unwrap().to_string();
    let out = run(&tiny_train_args(&out_str, &["--variant", "spgrl1"]));
    assert_eq!(out.status.code(), Some(0), "{:?}", out);

    for file in [
        "metrics.json",
        "manifest.json",
        "model.json",
        "embeddings.txt",
        "history.tsv",
    ] {
        assert!(out_dir.join(file).exists(), "missing {file}");
    }

    let metrics = read_json(&out_dir.join("metrics.json"));
    for field in [
        "acc", "macro_f1", "variant", "seed", "epochs", "alpha", "beta", "k", "sigma",
    ] {
        assert!(metrics.get(field).is_some(), "metrics missing {field}");
    }
    assert_eq!(metrics["variant"], "spgrl1");
    assert_eq!(metrics["seed"], 5);

    // Embeddings: one line per node, 2 * hidden2 values each.
    let embeddings = std::fs::read_to_string(out_dir.join("embeddings.txt")).unwrap();
    let lines: Vec<&str> = embeddings.lines().collect();
    assert_eq!(lines.len(), 60);
    assert_eq!(lines[0].split_whitespace().count(), 16);

    // History: header plus one row per epoch.
    let history = std::fs::read_to_string(out_dir.join("history.tsv")).unwrap();
    assert_eq!(history.lines().count(), 26);

    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["provenance"]["source"], "sbm");
    assert_eq!(manifest["config"]["epochs"], 25);
}

#[test]
fn f32_precision_mode_trains() {
    let dir = temp_dir("f32");
    let out_dir = dir.join("run");
    let out_str = out_dir.to_str().unwrap().to_string();
    let out = run(&tiny_train_args(&out_str, &["--precision", "f32"]));
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let metrics = read_json(&out_dir.join("metrics.json"));
    let acc = metrics["acc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["precision"], "f32");
}

#[test]
fn gradcheck_passes_and_is_deterministic() {
    let first = run(&["gradcheck", "--eps", "1e-5", "--n", "12", "--seed", "7"]);
    assert_eq!(first.status.code(), Some(0), "{:?}", first);
    let second = run(&["gradcheck", "--eps", "1e-5", "--n", "12", "--seed", "7"]);
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8_lossy(&first.stdout);
    assert!(text.contains("PASS"), "{text}");
}

#[test]
fn gradcheck_corrupt_fails_naming_the_block() {
    let out = run(&["gradcheck", "--corrupt", "w0"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("w0"), "{text}");
    assert!(text.contains("FAIL"), "{text}");
}

#[test]
fn sweep_emits_one_row_per_grid_point() {
    let dir = temp_dir("sweepk");
    let out_dir = dir.join("sweep");
    let out_str = out_dir.to_str().unwrap().to_string();
    let mut args = tiny_train_args(&out_str, &[]);
    args[0] = "sweep";
    args.extend_from_slice(&["--k", "2,4,8"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let rows = read_json(&out_dir.join("sweep.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let ks: Vec<u64> = rows.iter().map(|r| r["k"].as_u64().unwrap()).collect();
    assert_eq!(ks, vec![2, 4, 8]);
    for row in rows {
        assert_eq!(row["status"], "ok");
        assert!(row["acc"].as_f64().is_some());
    }
}

#[test]
fn single_point_sweep_matches_train_exactly() {
    let dir = temp_dir("sweep1");
    let train_dir = dir.join("train");
    let sweep_dir = dir.join("sweep");
    let train_str = train_dir.to_str().unwrap().to_string();
    let sweep_str = sweep_dir.to_str().unwrap().to_string();

    let out = run(&tiny_train_args(&train_str, &[]));
    assert_eq!(out.status.code(), Some(0));
    let mut args = tiny_train_args(&sweep_str, &[]);
    args[0] = "sweep";
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));

    let train_metrics = std::fs::read(train_dir.join("metrics.json")).unwrap();
    let cell_metrics = std::fs::read(sweep_dir.join("cell_0000/metrics.json")).unwrap();
    assert_eq!(train_metrics, cell_metrics);
}

#[test]
fn zero_weight_sweep_cell_equals_spgrl1() {
    let dir = temp_dir("sweep00");
    let sweep_dir = dir.join("sweep");
    let spgrl1_dir = dir.join("spgrl1");
    let sweep_str = sweep_dir.to_str().unwrap().to_string();
    let spgrl1_str = spgrl1_dir.to_str().unwrap().to_string();

    // Grid alpha in {0,1}, beta in {0,1}: four rows; cell 0 is (0, 0) and
    // carries the base seed.
    let mut args = tiny_train_args(&sweep_str, &[]);
    args[0] = "sweep";
    args.extend_from_slice(&["--alpha", "0,1", "--beta", "0,1"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let rows = read_json(&sweep_dir.join("sweep.json"));
    assert_eq!(rows.as_array().unwrap().len(), 4);

    let out = run(&tiny_train_args(&spgrl1_str, &["--variant", "spgrl1"]));
    assert_eq!(out.status.code(), Some(0));

    let cell0 = read_json(&sweep_dir.join("cell_0000/metrics.json"));
    let spgrl1 = read_json(&spgrl1_dir.join("metrics.json"));
    assert_eq!(cell0["acc"], spgrl1["acc"]);
    assert_eq!(cell0["macro_f1"], spgrl1["macro_f1"]);
}

#[test]
fn metrics_are_invariant_to_thread_count() {
    // 150 nodes puts every kernel on its parallel path; the row-disjoint
    // design must keep results bit-identical across pool sizes.
    let dir = temp_dir("threads");
    let run_with_threads = |threads: &str, tag: &str| -> Vec<u8> {
        let out_dir = dir.join(tag);
        let out = Command::new(bin())
            .env("RAYON_NUM_THREADS", threads)
            .args([
                "train",
                "--synth",
                "sbm",
                "--classes",
                "3",
                "--per-class",
                "50",
                "--feat-dim",
                "8",
                "--epochs",
                "15",
                "--hidden1",
                "16",
                "--hidden2",
                "8",
                "--lpc",
                "5",
                "--seed",
                "3",
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{out:?}");
        std::fs::read(out_dir.join("metrics.json")).unwrap()
    };
    let single = run_with_threads("1", "one");
    let many = run_with_threads("4", "four");
    assert_eq!(single, many, "thread count changed the metrics");
}

#[test]
fn default_config_reaches_smoke_accuracy() {
    let dir = temp_dir("smoke");
    let out_dir = dir.join("run");
    let out = run(&[
        "train",
        "--synth",
        "sbm",
        "--classes",
        "3",
        "--per-class",
        "50",
        "--epochs",
        "200",
        "--seed",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let metrics = read_json(&out_dir.join("metrics.json"));
    let acc = metrics["acc"].as_f64().unwrap();
    assert!(acc >= 0.85, "default-config accuracy {acc}");
}

#[test]
fn manifest_reproduces_the_run() {
    use spgrl::artifacts::{DataProvenance, RunManifest};
    use spgrl::data::generate_sbm;
    use spgrl::linalg::rng::stream;

    let dir = temp_dir("manifest");
    let out_dir = dir.join("run");
    let out_str = out_dir.to_str().unwrap().to_string();
    let out = run(&tiny_train_args(&out_str, &[]));
    assert_eq!(out.status.code(), Some(0));

    // Rebuild the entire run from the manifest alone and compare metrics.
    let manifest: RunManifest =
        spgrl::artifacts::read_json(out_dir.join("manifest.json")).unwrap();
    let DataProvenance::Sbm { sbm } = &manifest.provenance else {
        panic!("expected SBM provenance");
    };
    let mut rng = stream(manifest.config.seed, 7);
    let dataset = generate_sbm::<f64>(sbm, &mut rng).unwrap();
    let splits = manifest.config.make_splits(&dataset).unwrap();
    let replay = spgrl::train(&dataset, &splits, &manifest.config).unwrap();
    assert_eq!(replay.history.final_accuracy, manifest.metrics.acc);
    assert_eq!(replay.history.final_macro_f1, manifest.metrics.macro_f1);
}

#[test]
fn help_prints_usage_and_succeeds() {
    let out = run(&["help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--variant", "--pos-weight", "--no-self-loops", "--precision"] {
        assert!(text.contains(flag), "usage missing {flag}");
    }
}

//! Command-line entry points: `train`, `gradcheck`, and `sweep`.
//!
//! Exit codes: 0 success, 1 runtime or check failure, 2 usage error.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{
    write_embeddings, write_history, write_json, Checkpoint, DataProvenance, MetricsDoc,
    RunManifest,
};
use crate::data::{generate_sbm, load_dataset, Dataset, SbmConfig};
use crate::error::Result;
use crate::gradcheck::{run_gradcheck, GradcheckConfig};
use crate::linalg::rng::stream;
use crate::linalg::Scalar;
use crate::trainer::{train, PosWeight, TrainConfig};

const USAGE: &str = "\
usage: spgrl <command> [--flag value ...]

commands:
  train       train one model and write metrics, manifest, checkpoint,
              and embeddings to the output directory
  gradcheck   verify every analytic gradient of the full loss against
              central finite differences on a seeded instance
  sweep       run a grid of training jobs over --k/--alpha/--beta/--sigma
              (comma-separated lists) and aggregate a results table

data source (train, sweep):
  --synth sbm                      generate a stochastic block model
  --classes N --per-class N        SBM shape               (3, 50)
  --p-in P --p-out P               SBM edge probabilities  (0.3, 0.02)
  --feat-dim D --feat-noise S      SBM features            (32, 0.1)
  --features F --edges F --labels F  load the three-file dataset

training (train, sweep):
  --k N             kNN neighbors                 (7)
  --alpha W         reconstruction weight         (1.0)
  --beta W          contrastive weight            (1.0)
  --lr R            learning rate                 (0.0003)
  --weight-decay R  coupled L2 decay              (0.0005)
  --dropout P       input dropout                 (0.5)
  --epochs N        training iterations           (200)
  --hidden1 N --hidden2 N  GCN widths             (256, 128)
  --variant V       full | spgrl1 | spgrl2 | spgrl3  (full)
  --sigma S         Gaussian feature perturbation (0)
  --lpc N           labeled nodes per class       (20)
  --n-test N        test-set size                 (min(1000, remaining))
  --seed N          RNG seed                      (1)
  --temperature T   contrastive temperature       (1)
  --pos-weight W    off | auto | <number>         (off)
  --no-self-loops   normalize A instead of A + I
  --out DIR         output directory              (spgrl-out)
  --precision P     f64 | f32                     (f64)
  --deterministic   recorded in the manifest; execution is always
                    deterministic for a fixed seed

gradcheck:
  --n N        instance size        (10)
  --eps E      difference step      (1e-5)
  --seed N     instance seed        (1)
  --corrupt B  debug: corrupt gradient blocks with this name prefix
";

const BOOL_FLAGS: [&str; 2] = ["deterministic", "no-self-loops"];

const TRAIN_FLAGS: [&str; 28] = [
    "features",
    "edges",
    "labels",
    "synth",
    "classes",
    "per-class",
    "p-in",
    "p-out",
    "feat-dim",
    "feat-noise",
    "k",
    "alpha",
    "beta",
    "lr",
    "weight-decay",
    "dropout",
    "epochs",
    "hidden1",
    "hidden2",
    "variant",
    "sigma",
    "lpc",
    "n-test",
    "seed",
    "out",
    "deterministic",
    "precision",
    "no-self-loops",
];

const TRAIN_EXTRA_FLAGS: [&str; 2] = ["temperature", "pos-weight"];

const GRADCHECK_FLAGS: [&str; 4] = ["eps", "n", "seed", "corrupt"];

/// A usage problem (exit 2) as opposed to a runtime failure (exit 1).
#[derive(Debug)]
struct UsageError(String);

enum CliFailure {
    Usage(String),
    Runtime(crate::Error),
}

impl From<UsageError> for CliFailure {
    fn from(e: UsageError) -> Self {
        CliFailure::Usage(e.0)
    }
}

impl From<crate::Error> for CliFailure {
    fn from(e: crate::Error) -> Self {
        CliFailure::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, CliFailure>;

/// Parsed `--name value` and `--name` flags.
struct Flags {
    values: BTreeMap<String, String>,
    bools: BTreeSet<String>,
}

impl Flags {
    fn parse(tokens: &[String], allowed: &[&str]) -> std::result::Result<Flags, UsageError> {
        let mut values = BTreeMap::new();
        let mut bools = BTreeSet::new();
        let mut it = tokens.iter().peekable();
        while let Some(tok) = it.next() {
            let name = tok
                .strip_prefix("--")
                .ok_or_else(|| UsageError(format!("expected a --flag, found {tok:?}")))?;
            if !allowed.contains(&name) {
                return Err(UsageError(format!("unknown flag --{name}")));
            }
            if BOOL_FLAGS.contains(&name) {
                bools.insert(name.to_string());
                continue;
            }
            let value = it
                .next()
                .ok_or_else(|| UsageError(format!("--{name} expects a value")))?;
            if values.insert(name.to_string(), value.clone()).is_some() {
                return Err(UsageError(format!("--{name} given twice")));
            }
        }
        Ok(Flags { values, bools })
    }

    fn has(&self, name: &str) -> bool {
        self.values.contains_key(name) || self.bools.contains(name)
    }

    fn raw(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }

    fn get<T: FromStr>(&self, name: &str) -> std::result::Result<Option<T>, UsageError> {
        match self.values.get(name) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| UsageError(format!("--{name}: cannot parse {raw:?}"))),
        }
    }

    fn get_or<T: FromStr>(&self, name: &str, default: T) -> std::result::Result<T, UsageError> {
        Ok(self.get(name)?.unwrap_or(default))
    }

    /// Comma-separated list; a single value is a one-element list.
    fn get_list<T: FromStr>(
        &self,
        name: &str,
        default: T,
    ) -> std::result::Result<Vec<T>, UsageError> {
        match self.values.get(name) {
            None => Ok(vec![default]),
            Some(raw) => raw
                .split(',')
                .map(|piece| {
                    piece
                        .trim()
                        .parse::<T>()
                        .map_err(|_| UsageError(format!("--{name}: cannot parse {piece:?}")))
                })
                .collect(),
        }
    }
}

/// Entry point; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    let Some(command) = args.first() else {
        eprint!("{USAGE}");
        return 2;
    };
    let rest = &args[1..];
    let outcome = match command.as_str() {
        "train" => cmd_train(rest),
        "gradcheck" => cmd_gradcheck(rest),
        "sweep" => cmd_sweep(rest),
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            return 0;
        }
        other => {
            eprintln!("unknown command {other:?}");
            eprint!("{USAGE}");
            return 2;
        }
    };
    match outcome {
        Ok(code) => code,
        Err(CliFailure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprint!("{USAGE}");
            2
        }
        Err(CliFailure::Runtime(err)) => {
            eprintln!("error: {err}");
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Precision {
    F32,
    F64,
}

impl Precision {
    fn as_str(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

#[derive(Debug, Clone)]
enum DataSource {
    Files {
        features: String,
        edges: String,
        labels: String,
    },
    Sbm(SbmConfig),
}

impl DataSource {
    fn provenance(&self) -> DataProvenance {
        match self {
            DataSource::Files {
                features,
                edges,
                labels,
            } => DataProvenance::Files {
                features: features.clone(),
                edges: edges.clone(),
                labels: labels.clone(),
            },
            DataSource::Sbm(sbm) => DataProvenance::Sbm { sbm: *sbm },
        }
    }

    fn load<T: Scalar>(&self, seed: u64) -> Result<Dataset<T>> {
        match self {
            DataSource::Files {
                features,
                edges,
                labels,
            } => load_dataset(features, edges, labels),
            DataSource::Sbm(sbm) => {
                let mut rng = stream(seed, 7);
                generate_sbm(sbm, &mut rng)
            }
        }
    }
}

fn parse_data_source(flags: &Flags) -> std::result::Result<DataSource, UsageError> {
    let file_flags = ["features", "edges", "labels"];
    let given: Vec<&str> = file_flags
        .iter()
        .copied()
        .filter(|f| flags.has(f))
        .collect();
    let synth = flags.raw("synth");

    if !given.is_empty() && synth.is_some() {
        return Err(UsageError(
            "--synth conflicts with --features/--edges/--labels".into(),
        ));
    }
    if !given.is_empty() {
        if given.len() != 3 {
            let missing: Vec<String> = file_flags
                .iter()
                .filter(|f| !flags.has(f))
                .map(|f| format!("--{f}"))
                .collect();
            return Err(UsageError(format!(
                "file datasets need all three paths; missing {}",
                missing.join(", ")
            )));
        }
        return Ok(DataSource::Files {
            features: flags.raw("features").unwrap().to_string(),
            edges: flags.raw("edges").unwrap().to_string(),
            labels: flags.raw("labels").unwrap().to_string(),
        });
    }
    match synth {
        Some("sbm") => {
            let defaults = SbmConfig::default();
            Ok(DataSource::Sbm(SbmConfig {
                classes: flags.get_or("classes", defaults.classes)?,
                per_class: flags.get_or("per-class", defaults.per_class)?,
                p_in: flags.get_or("p-in", defaults.p_in)?,
                p_out: flags.get_or("p-out", defaults.p_out)?,
                feat_dim: flags.get_or("feat-dim", defaults.feat_dim)?,
                feat_noise: flags.get_or("feat-noise", defaults.feat_noise)?,
            }))
        }
        Some(other) => Err(UsageError(format!(
            "unknown synthetic generator {other:?}; available: sbm"
        ))),
        None => Err(UsageError(
            "no data source: pass --synth sbm or --features/--edges/--labels".into(),
        )),
    }
}

fn parse_pos_weight(flags: &Flags) -> std::result::Result<PosWeight, UsageError> {
    match flags.raw("pos-weight") {
        None | Some("off") => Ok(PosWeight::Off),
        Some("auto") => Ok(PosWeight::Auto),
        Some(raw) => raw
            .parse::<f64>()
            .map(PosWeight::Fixed)
            .map_err(|_| UsageError(format!("--pos-weight: expected off, auto, or a number, got {raw:?}"))),
    }
}

fn parse_train_config(flags: &Flags) -> std::result::Result<TrainConfig, UsageError> {
    parse_train_config_excluding(flags, &[])
}

/// As `parse_train_config`, but flags named in `grid` keep their defaults;
/// the sweep parses those as comma-separated lists instead.
fn parse_train_config_excluding(
    flags: &Flags,
    grid: &[&str],
) -> std::result::Result<TrainConfig, UsageError> {
    let d = TrainConfig::default();
    let scalar = |name: &str| !grid.contains(&name);
    let variant = match flags.raw("variant") {
        None => d.variant,
        Some(raw) => raw
            .parse()
            .map_err(|e: crate::Error| UsageError(e.to_string()))?,
    };
    Ok(TrainConfig {
        k: if scalar("k") { flags.get_or("k", d.k)? } else { d.k },
        alpha: if scalar("alpha") {
            flags.get_or("alpha", d.alpha)?
        } else {
            d.alpha
        },
        beta: if scalar("beta") {
            flags.get_or("beta", d.beta)?
        } else {
            d.beta
        },
        learning_rate: flags.get_or("lr", d.learning_rate)?,
        weight_decay: flags.get_or("weight-decay", d.weight_decay)?,
        dropout: flags.get_or("dropout", d.dropout)?,
        epochs: flags.get_or("epochs", d.epochs)?,
        hidden1: flags.get_or("hidden1", d.hidden1)?,
        hidden2: flags.get_or("hidden2", d.hidden2)?,
        variant,
        seed: flags.get_or("seed", d.seed)?,
        sigma: if scalar("sigma") {
            flags.get_or("sigma", d.sigma)?
        } else {
            d.sigma
        },
        labels_per_class: flags.get_or("lpc", d.labels_per_class)?,
        n_test: flags.get("n-test")?,
        temperature: flags.get_or("temperature", d.temperature)?,
        pos_weight: parse_pos_weight(flags)?,
        self_loops: !flags.bools.contains("no-self-loops"),
    })
}

fn parse_precision(flags: &Flags) -> std::result::Result<Precision, UsageError> {
    match flags.raw("precision") {
        None | Some("f64") => Ok(Precision::F64),
        Some("f32") => Ok(Precision::F32),
        Some(other) => Err(UsageError(format!(
            "--precision: expected f32 or f64, got {other:?}"
        ))),
    }
}

fn train_flag_set() -> Vec<&'static str> {
    TRAIN_FLAGS
        .iter()
        .chain(TRAIN_EXTRA_FLAGS.iter())
        .copied()
        .collect()
}

/// Runs one training job and writes all artifacts into `out_dir`.
fn execute_run<T: Scalar>(
    source: &DataSource,
    config: &TrainConfig,
    out_dir: &Path,
    precision: Precision,
    deterministic: bool,
) -> Result<MetricsDoc> {
    let dataset: Dataset<T> = source.load(config.seed)?;
    let splits = config.make_splits(&dataset)?;
    let output = train(&dataset, &splits, config)?;

    std::fs::create_dir_all(out_dir)
        .map_err(|e| crate::Error::io(out_dir.display().to_string(), e))?;
    let metrics = MetricsDoc::from_run(config, &output.history);
    write_json(out_dir.join("metrics.json"), &metrics)?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        precision: precision.as_str().to_string(),
        deterministic,
        provenance: source.provenance(),
        config: *config,
        metrics: metrics.clone(),
    };
    write_json(out_dir.join("manifest.json"), &manifest)?;
    write_json(
        out_dir.join("model.json"),
        &Checkpoint::from_model(&output.model, config, precision.as_str()),
    )?;
    write_embeddings(out_dir.join("embeddings.txt"), &output.z_topo, &output.z_feat)?;
    write_history(out_dir.join("history.tsv"), &output.history)?;
    Ok(metrics)
}

fn cmd_train(tokens: &[String]) -> CliResult<i32> {
    let allowed = train_flag_set();
    let flags = Flags::parse(tokens, &allowed)?;
    let source = parse_data_source(&flags)?;
    let config = parse_train_config(&flags)?;
    let precision = parse_precision(&flags)?;
    let deterministic = flags.bools.contains("deterministic");
    let out_dir = PathBuf::from(flags.raw("out").unwrap_or("spgrl-out"));

    let metrics = match precision {
        Precision::F64 => execute_run::<f64>(&source, &config, &out_dir, precision, deterministic)?,
        Precision::F32 => execute_run::<f32>(&source, &config, &out_dir, precision, deterministic)?,
    };
    println!(
        "acc={} macro_f1={} variant={} seed={} out={}",
        metrics.acc,
        metrics.macro_f1,
        metrics.variant,
        metrics.seed,
        out_dir.display()
    );
    Ok(0)
}

fn cmd_gradcheck(tokens: &[String]) -> CliResult<i32> {
    let flags = Flags::parse(tokens, &GRADCHECK_FLAGS)?;
    let defaults = GradcheckConfig::default();
    let config = GradcheckConfig {
        n: flags.get_or("n", defaults.n)?,
        eps: flags.get_or("eps", defaults.eps)?,
        seed: flags.get_or("seed", defaults.seed)?,
        corrupt: flags.get("corrupt")?,
    };
    let report = run_gradcheck(&config)?;
    for (name, err) in &report.per_block {
        println!("block {name}: max relative error {err:.3e}");
    }
    if report.passed() {
        println!(
            "gradcheck PASS: max relative error {:.3e} < {:.0e}",
            report.max_rel_err, report.threshold
        );
        Ok(0)
    } else {
        println!(
            "gradcheck FAIL: blocks above {:.0e}: {}",
            report.threshold,
            report.failing_blocks.join(", ")
        );
        Ok(1)
    }
}

/// One cell of a sweep, as stored in the aggregate table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub seed: u64,
    pub acc: Option<f64>,
    pub macro_f1: Option<f64>,
    pub status: String,
}

fn cmd_sweep(tokens: &[String]) -> CliResult<i32> {
    let allowed = train_flag_set();
    let flags = Flags::parse(tokens, &allowed)?;
    let source = parse_data_source(&flags)?;
    let base = parse_train_config_excluding(&flags, &["k", "alpha", "beta", "sigma"])?;
    let precision = parse_precision(&flags)?;
    let deterministic = flags.bools.contains("deterministic");
    let out_dir = PathBuf::from(flags.raw("out").unwrap_or("spgrl-out"));

    let ks: Vec<usize> = flags.get_list("k", base.k)?;
    let alphas: Vec<f64> = flags.get_list("alpha", base.alpha)?;
    let betas: Vec<f64> = flags.get_list("beta", base.beta)?;
    let sigmas: Vec<f64> = flags.get_list("sigma", base.sigma)?;

    let mut cells = Vec::new();
    for &k in &ks {
        for &alpha in &alphas {
            for &beta in &betas {
                for &sigma in &sigmas {
                    let cell = cells.len();
                    cells.push(TrainConfig {
                        k,
                        alpha,
                        beta,
                        sigma,
                        seed: base.seed + cell as u64,
                        ..base
                    });
                }
            }
        }
    }

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| crate::Error::io(out_dir.display().to_string(), e))?;

    let rows: Vec<SweepRow> = cells
        .par_iter()
        .enumerate()
        .map(|(cell, config)| {
            let cell_dir = out_dir.join(format!("cell_{cell:04}"));
            let outcome = match precision {
                Precision::F64 => {
                    execute_run::<f64>(&source, config, &cell_dir, precision, deterministic)
                }
                Precision::F32 => {
                    execute_run::<f32>(&source, config, &cell_dir, precision, deterministic)
                }
            };
            match outcome {
                Ok(metrics) => SweepRow {
                    cell,
                    k: config.k,
                    alpha: config.alpha,
                    beta: config.beta,
                    sigma: config.sigma,
                    seed: config.seed,
                    acc: Some(metrics.acc),
                    macro_f1: Some(metrics.macro_f1),
                    status: "ok".to_string(),
                },
                Err(err) => SweepRow {
                    cell,
                    k: config.k,
                    alpha: config.alpha,
                    beta: config.beta,
                    sigma: config.sigma,
                    seed: config.seed,
                    acc: None,
                    macro_f1: None,
                    status: err.to_string(),
                },
            }
        })
        .collect();

    write_json(out_dir.join("sweep.json"), &rows)?;
    println!("cell\tk\talpha\tbeta\tsigma\tseed\tacc\tmacro_f1\tstatus");
    for row in &rows {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            row.cell,
            row.k,
            row.alpha,
            row.beta,
            row.sigma,
            row.seed,
            row.acc.map_or("-".to_string(), |v| v.to_string()),
            row.macro_f1.map_or("-".to_string(), |v| v.to_string()),
            row.status
        );
    }
    Ok(0)
}

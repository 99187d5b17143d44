//! Dataset ingestion from flat files, semi-supervised split construction,
//! synthetic stochastic-block-model generation, and Gaussian feature
//! perturbation.
//!
//! File formats (text, UTF-8, whitespace-separated):
//! * features — first line `N d`, then N lines of d decimal reals;
//! * edges — one `src dst` pair of 0-based indices per line, read as
//!   undirected; duplicates and both orientations are tolerated;
//! * labels — one `node class` pair per line; absent nodes are unlabeled.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::rng::{standard_normal, Prng};
use crate::linalg::{DenseMatrix, Scalar, SparseGraph};

/// A node-classification problem instance: features, the original graph,
/// labels (with unlabeled nodes allowed), and the class count.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    pub x: DenseMatrix<T>,
    pub a: SparseGraph<T>,
    pub labels: Vec<Option<usize>>,
    pub n_classes: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }
}

/// Train/test masks over the nodes, plus the seed that produced them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMasks {
    pub train: Vec<bool>,
    pub test: Vec<bool>,
    pub seed: u64,
}

impl SplitMasks {
    pub fn train_count(&self) -> usize {
        self.train.iter().filter(|&&b| b).count()
    }

    pub fn test_count(&self) -> usize {
        self.test.iter().filter(|&&b| b).count()
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let content =
        fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(content.lines().map(str::to_owned).collect())
}

/// Loads a dataset from the three flat files. The graph is deduplicated,
/// symmetrized, and stripped of self-loops; every edge and label index must
/// fall inside the feature row count.
pub fn load_dataset<T: Scalar>(
    features_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Dataset<T>> {
    let features_path = features_path.as_ref();
    let edges_path = edges_path.as_ref();
    let labels_path = labels_path.as_ref();

    // Features.
    let lines = read_lines(features_path)?;
    let header = lines
        .first()
        .ok_or_else(|| parse_err(features_path, 1, "empty features file"))?;
    let mut it = header.split_whitespace();
    let n: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(features_path, 1, "expected header `N d`"))?;
    let d: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(features_path, 1, "expected header `N d`"))?;
    if it.next().is_some() {
        return Err(parse_err(features_path, 1, "trailing tokens after `N d`"));
    }
    if lines.len() < n + 1 {
        return Err(parse_err(
            features_path,
            lines.len() + 1,
            format!("expected {n} feature rows, found {}", lines.len() - 1),
        ));
    }
    let mut x = DenseMatrix::<T>::zeros(n, d);
    for i in 0..n {
        let line_no = i + 2;
        let row = &lines[i + 1];
        let mut count = 0;
        for (j, tok) in row.split_whitespace().enumerate() {
            if j >= d {
                return Err(parse_err(features_path, line_no, "too many values"));
            }
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(features_path, line_no, format!("bad real {tok:?}")))?;
            x.set(i, j, T::from_f64(v));
            count += 1;
        }
        if count != d {
            return Err(parse_err(
                features_path,
                line_no,
                format!("expected {d} values, found {count}"),
            ));
        }
    }

    // Edges.
    let mut edges = Vec::new();
    for (idx, line) in read_lines(edges_path)?.iter().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let src: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(edges_path, line_no, "expected `src dst`"))?;
        let dst: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(edges_path, line_no, "expected `src dst`"))?;
        if it.next().is_some() {
            return Err(parse_err(edges_path, line_no, "trailing tokens"));
        }
        if src >= n || dst >= n {
            return Err(parse_err(
                edges_path,
                line_no,
                format!("node index beyond the {n} feature rows"),
            ));
        }
        edges.push((src, dst));
    }
    let a = SparseGraph::from_undirected_edges(n, &edges)?;

    // Labels.
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut n_classes = 0usize;
    for (idx, line) in read_lines(labels_path)?.iter().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let node: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(labels_path, line_no, "expected `node class`"))?;
        let class: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(labels_path, line_no, "expected `node class`"))?;
        if it.next().is_some() {
            return Err(parse_err(labels_path, line_no, "trailing tokens"));
        }
        if node >= n {
            return Err(parse_err(
                labels_path,
                line_no,
                format!("node index beyond the {n} feature rows"),
            ));
        }
        if labels[node].is_some() {
            return Err(parse_err(
                labels_path,
                line_no,
                format!("duplicate label for node {node}"),
            ));
        }
        labels[node] = Some(class);
        n_classes = n_classes.max(class + 1);
    }

    Ok(Dataset {
        x,
        a,
        labels,
        n_classes,
    })
}

/// Writes the dataset in the same three-file format `load_dataset` reads.
/// Reals are written in shortest round-trip decimal form, so a save/load
/// cycle is bit-exact.
pub fn save_dataset<T: Scalar>(
    dataset: &Dataset<T>,
    features_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<()> {
    let write = |path: &Path, content: String| -> Result<()> {
        let mut f =
            fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        f.write_all(content.as_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))
    };

    let n = dataset.n();
    let mut features = format!("{} {}\n", n, dataset.feature_dim());
    for i in 0..n {
        let row: Vec<String> = dataset.x.row(i).iter().map(|v| format!("{v}")).collect();
        features.push_str(&row.join(" "));
        features.push('\n');
    }
    write(features_path.as_ref(), features)?;

    let mut edges = String::new();
    for i in 0..n {
        let (cols, _) = dataset.a.row(i);
        for &j in cols {
            if i < j {
                edges.push_str(&format!("{i} {j}\n"));
            }
        }
    }
    write(edges_path.as_ref(), edges)?;

    let mut labels = String::new();
    for (i, label) in dataset.labels.iter().enumerate() {
        if let Some(c) = label {
            labels.push_str(&format!("{i} {c}\n"));
        }
    }
    write(labels_path.as_ref(), labels)
}

/// Samples `per_class` labeled nodes per class for training and `n_test`
/// nodes from the remaining labeled pool for testing. Deterministic in
/// `seed`.
pub fn make_splits(
    labels: &[Option<usize>],
    n_classes: usize,
    per_class: usize,
    n_test: usize,
    seed: u64,
) -> Result<SplitMasks> {
    let mut rng = crate::linalg::rng::stream(seed, 4);
    let n = labels.len();
    let mut train = vec![false; n];
    let mut test = vec![false; n];

    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == Some(class)).collect();
        if members.len() < per_class {
            return Err(Error::InsufficientClass {
                class,
                available: members.len(),
                needed: per_class,
            });
        }
        members.shuffle(&mut rng);
        for &node in members.iter().take(per_class) {
            train[node] = true;
        }
    }

    let mut pool: Vec<usize> = (0..n)
        .filter(|&i| labels[i].is_some() && !train[i])
        .collect();
    if pool.len() < n_test {
        return Err(Error::invalid(format!(
            "{n_test} test nodes requested but only {} labeled nodes remain",
            pool.len()
        )));
    }
    pool.shuffle(&mut rng);
    for &node in pool.iter().take(n_test) {
        test[node] = true;
    }

    Ok(SplitMasks { train, test, seed })
}

/// Stochastic-block-model parameters for synthetic instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub classes: usize,
    pub per_class: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feat_dim: usize,
    pub feat_noise: f64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        SbmConfig {
            classes: 3,
            per_class: 50,
            p_in: 0.3,
            p_out: 0.02,
            feat_dim: 32,
            feat_noise: 0.1,
        }
    }
}

/// Generates a block-model graph (intra-class edge probability `p_in`, inter
/// `p_out`) with fully labeled nodes. Class mean features are the rows of a
/// random orthonormal set, so they are unit-norm and mutually orthogonal;
/// per-node features add isotropic Gaussian noise of scale `feat_noise`.
pub fn generate_sbm<T: Scalar>(cfg: &SbmConfig, rng: &mut Prng) -> Result<Dataset<T>> {
    if cfg.classes == 0 || cfg.per_class == 0 || cfg.feat_dim == 0 {
        return Err(Error::invalid("classes, per_class, feat_dim must be >= 1"));
    }
    if cfg.classes > cfg.feat_dim {
        return Err(Error::invalid(format!(
            "feat_dim {} must be at least the class count {} for orthogonal class means",
            cfg.feat_dim, cfg.classes
        )));
    }
    for (name, p) in [("p_in", cfg.p_in), ("p_out", cfg.p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("{name} = {p} outside [0, 1]")));
        }
    }
    if cfg.feat_noise < 0.0 {
        return Err(Error::invalid("feat_noise must be nonnegative"));
    }

    let n = cfg.classes * cfg.per_class;
    let labels: Vec<Option<usize>> = (0..n).map(|i| Some(i / cfg.per_class)).collect();

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] {
                cfg.p_in
            } else {
                cfg.p_out
            };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let a = SparseGraph::from_undirected_edges(n, &edges)?;

    // Class means: Gram-Schmidt over random Gaussian vectors.
    let means = orthonormal_rows(cfg.classes, cfg.feat_dim, rng);
    let mut x = DenseMatrix::<T>::zeros(n, cfg.feat_dim);
    for i in 0..n {
        let mean = &means[labels[i].unwrap()];
        let row = x.row_mut(i);
        for (k, v) in row.iter_mut().enumerate() {
            let noise = if cfg.feat_noise > 0.0 {
                cfg.feat_noise * standard_normal(rng)
            } else {
                0.0
            };
            *v = T::from_f64(mean[k] + noise);
        }
    }

    Ok(Dataset {
        x,
        a,
        labels,
        n_classes: cfg.classes,
    })
}

fn orthonormal_rows(m: usize, d: usize, rng: &mut Prng) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    while rows.len() < m {
        let mut v: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
        for prev in &rows {
            let proj: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (vi, pi) in v.iter_mut().zip(prev) {
                *vi -= proj * pi;
            }
        }
        let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue; // essentially parallel draw; resample
        }
        for vi in &mut v {
            *vi /= norm;
        }
        rows.push(v);
    }
    rows
}

/// Adds i.i.d. Gaussian noise of standard deviation `sigma` to every entry.
/// Applied before kNN construction, so the feature graph is corrupted too.
pub fn perturb_features<T: Scalar>(
    x: &DenseMatrix<T>,
    sigma: f64,
    rng: &mut Prng,
) -> Result<DenseMatrix<T>> {
    if sigma < 0.0 {
        return Err(Error::invalid("sigma must be nonnegative"));
    }
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    let mut out = x.clone();
    for v in out.data_mut() {
        *v += T::from_f64(sigma * standard_normal(rng));
    }
    Ok(out)
}

//! The three-file dataset format end to end: write a small dataset to disk,
//! load it back, train, and save a checkpoint that round-trips exactly.
//!
//! Features file: header `N d`, then N rows of d reals.
//! Edges file: one `src dst` pair per line (undirected, duplicates fine).
//! Labels file: one `node class` pair per line; absent nodes are unlabeled.
//!
//! ```text
//! cargo run -p spgrl --example citation_files
//! ```

use spgrl::artifacts::{read_json, write_json, Checkpoint};
use spgrl::data::{generate_sbm, load_dataset, save_dataset, SbmConfig};
use spgrl::linalg::rng::stream;
use spgrl::trainer::{train, TrainConfig};
use spgrl::ModelParams;

fn main() -> spgrl::Result<()> {
    let dir = std::env::temp_dir().join("spgrl_citation_files_example");
    std::fs::create_dir_all(&dir).map_err(|e| spgrl::Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let features = dir.join("features.txt");
    let edges = dir.join("edges.txt");
    let labels = dir.join("labels.txt");

    // Synthesize a small dataset and write it in the exchange format.
    let mut rng = stream(7, 7);
    let original = generate_sbm::<f64>(
        &SbmConfig {
            classes: 2,
            per_class: 30,
            p_in: 0.25,
            p_out: 0.03,
            feat_dim: 8,
            feat_noise: 0.3,
        },
        &mut rng,
    )?;
    save_dataset(&original, &features, &edges, &labels)?;
    println!("wrote dataset under {}", dir.display());

    let dataset = load_dataset::<f64>(&features, &edges, &labels)?;
    assert_eq!(dataset.x.data(), original.x.data());
    println!(
        "loaded back: {} nodes, {} undirected edges, {} classes (bit-exact features)",
        dataset.n(),
        dataset.a.undirected_edge_count(),
        dataset.n_classes
    );

    let config = TrainConfig {
        epochs: 80,
        hidden1: 16,
        hidden2: 8,
        learning_rate: 1e-3,
        labels_per_class: 5,
        seed: 7,
        ..TrainConfig::default()
    };
    let splits = config.make_splits(&dataset)?;
    let output = train(&dataset, &splits, &config)?;
    println!(
        "trained: test accuracy {:.3}, macro-F1 {:.3}",
        output.history.final_accuracy, output.history.final_macro_f1
    );

    // Checkpoints carry every parameter in shortest round-trip decimals, so
    // a restored model evaluates identically.
    let ckpt_path = dir.join("model.json");
    write_json(&ckpt_path, &Checkpoint::from_model(&output.model, &config, "f64"))?;
    let restored: ModelParams<f64> = read_json::<Checkpoint>(&ckpt_path)?.to_model()?;
    assert_eq!(restored, output.model);
    let ctx = &output.context;
    let replay = spgrl::evaluate(&restored, &ctx.x, &ctx.graphs, &ctx.labels, &ctx.test_mask)?;
    assert_eq!(replay.accuracy, output.history.final_accuracy);
    println!(
        "checkpoint round-trip at {} is exact; restored model reproduces accuracy {:.3}",
        ckpt_path.display(),
        replay.accuracy
    );
    Ok(())
}

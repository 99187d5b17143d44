//! Start here: trains the full model on a synthetic stochastic block model
//! and prints the loss curve and final test metrics.
//!
//! ```text
//! cargo run --release -p spgrl --example train_synthetic
//! ```

use spgrl::data::{generate_sbm, SbmConfig};
use spgrl::linalg::rng::stream;
use spgrl::trainer::{train, TrainConfig};

fn main() -> spgrl::Result<()> {
    // Three communities of 50 nodes, moderately informative features.
    let sbm = SbmConfig {
        classes: 3,
        per_class: 50,
        p_in: 0.3,
        p_out: 0.02,
        feat_dim: 32,
        feat_noise: 0.1,
    };
    let config = TrainConfig {
        epochs: 200,
        hidden1: 64,
        hidden2: 32,
        learning_rate: 1e-3,
        seed: 1,
        ..TrainConfig::default()
    };

    let mut data_rng = stream(config.seed, 7);
    let dataset = generate_sbm::<f64>(&sbm, &mut data_rng)?;
    let splits = config.make_splits(&dataset)?;
    println!(
        "dataset: {} nodes, {} undirected edges, {} features, {} classes",
        dataset.n(),
        dataset.a.undirected_edge_count(),
        dataset.feature_dim(),
        dataset.n_classes
    );
    println!(
        "split: {} train / {} test nodes",
        splits.train_count(),
        splits.test_count()
    );

    let output = train(&dataset, &splits, &config)?;

    println!();
    println!("epoch   total     l_cl      l_re     l_cr     train_acc");
    for record in output
        .history
        .epochs
        .iter()
        .step_by(25)
        .chain(output.history.epochs.last())
    {
        let l = record.losses;
        println!(
            "{:>5}   {:<8.4}  {:<8.4}  {:<7.4}  {:<7.4}  {:.3}",
            record.epoch, l.total, l.l_cl, l.l_re, l.l_cr, record.train_accuracy
        );
    }
    println!();
    println!(
        "test accuracy {:.4}, macro-F1 {:.4}",
        output.history.final_accuracy, output.history.final_macro_f1
    );
    println!(
        "embeddings: {} nodes x {} dims per view, ready for export",
        output.z_topo.rows(),
        output.z_topo.cols()
    );
    Ok(())
}

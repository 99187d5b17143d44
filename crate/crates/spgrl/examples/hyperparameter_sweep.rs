//! Grid-sweeps the neighbor count k and the trade-off weights, one training
//! run per cell, and prints the aggregated table. The `spgrl sweep`
//! subcommand wraps the same loop with per-cell output directories and a
//! JSON table.
//!
//! ```text
//! cargo run --release -p spgrl --example hyperparameter_sweep
//! ```

use spgrl::data::{generate_sbm, make_splits, SbmConfig};
use spgrl::linalg::rng::stream;
use spgrl::trainer::{train, TrainConfig};

fn main() -> spgrl::Result<()> {
    let sbm = SbmConfig {
        classes: 3,
        per_class: 50,
        p_in: 0.2,
        p_out: 0.02,
        feat_dim: 8,
        feat_noise: 0.4,
    };
    let base = TrainConfig {
        epochs: 150,
        hidden1: 32,
        hidden2: 16,
        learning_rate: 1e-3,
        labels_per_class: 5,
        n_test: Some(100),
        seed: 3,
        ..TrainConfig::default()
    };

    let ks = [2usize, 5, 10];
    let alphas = [0.0f64, 50.0];

    println!("k     alpha   acc      macro_f1");
    for &k in &ks {
        for &alpha in &alphas {
            let mut data_rng = stream(base.seed, 7);
            let dataset = generate_sbm::<f64>(&sbm, &mut data_rng)?;
            let splits = make_splits(&dataset.labels, sbm.classes, 5, 100, base.seed)?;
            let config = TrainConfig {
                k,
                alpha,
                beta: 0.02,
                ..base
            };
            let out = train(&dataset, &splits, &config)?;
            println!(
                "{k:<5} {alpha:<7} {:.4}   {:.4}",
                out.history.final_accuracy, out.history.final_macro_f1
            );
        }
    }
    Ok(())
}

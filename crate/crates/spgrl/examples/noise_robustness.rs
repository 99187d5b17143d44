//! Perturbs input features with Gaussian noise of increasing strength and
//! compares how the full objective and the classification-only ablation
//! degrade. The perturbation lands before kNN construction, so the feature
//! graph is corrupted too.
//!
//! ```text
//! cargo run --release -p spgrl --example noise_robustness
//! ```

use spgrl::data::{generate_sbm, make_splits, SbmConfig};
use spgrl::linalg::rng::stream;
use spgrl::objectives::Variant;
use spgrl::trainer::{train, TrainConfig};

fn main() -> spgrl::Result<()> {
    let sbm = SbmConfig {
        classes: 3,
        per_class: 100,
        p_in: 0.10,
        p_out: 0.01,
        feat_dim: 6,
        feat_noise: 0.6,
    };
    let seeds: Vec<u64> = (0..3).collect();
    let sigmas = [0.0, 0.5, 1.0];

    println!("mean test accuracy over {} seeds:", seeds.len());
    println!("sigma    full     spgrl1");
    for &sigma in &sigmas {
        let mut means = Vec::new();
        for variant in [Variant::Full, Variant::Spgrl1] {
            let mut acc_sum = 0.0;
            for &seed in &seeds {
                let mut data_rng = stream(seed, 7);
                let dataset = generate_sbm::<f64>(&sbm, &mut data_rng)?;
                let splits = make_splits(&dataset.labels, sbm.classes, 3, 200, seed)?;
                let config = TrainConfig {
                    k: 7,
                    alpha: 50.0,
                    beta: 0.02,
                    learning_rate: 1e-3,
                    epochs: 300,
                    hidden1: 32,
                    hidden2: 16,
                    labels_per_class: 3,
                    n_test: Some(200),
                    variant,
                    seed,
                    sigma,
                    ..TrainConfig::default()
                };
                acc_sum += train(&dataset, &splits, &config)?.history.final_accuracy;
            }
            means.push(acc_sum / seeds.len() as f64);
        }
        println!("{sigma:<7}  {:.4}   {:.4}", means[0], means[1]);
    }
    println!();
    println!("the reconstruction and contrastive terms anchor the embeddings");
    println!("to the clean topology, so the full objective degrades slower.");
    Ok(())
}

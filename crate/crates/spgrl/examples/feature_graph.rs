//! Builds the cosine kNN feature graph for a toy feature matrix and shows
//! the symmetric normalization applied to both views before propagation.
//!
//! ```text
//! cargo run -p spgrl --example feature_graph
//! ```

use spgrl::graph::{build_knn_graph, cosine_similarity_matrix, normalize_adjacency};
use spgrl::linalg::DenseMatrix;

fn main() -> spgrl::Result<()> {
    // Two feature clusters plus one outlier.
    let x = DenseMatrix::from_rows(&[
        vec![1.0, 0.1, 0.0],
        vec![0.9, 0.2, 0.0],
        vec![1.1, 0.0, 0.1],
        vec![0.0, 1.0, 0.9],
        vec![0.1, 0.9, 1.0],
        vec![-1.0, -1.0, 3.0],
    ])?;

    let sims = cosine_similarity_matrix(&x)?;
    println!("cosine similarities:");
    for i in 0..x.rows() {
        let row: Vec<String> = (0..x.rows())
            .map(|j| format!("{:+.2}", sims.get(i, j)))
            .collect();
        println!("  node {i}: [{}]", row.join(", "));
    }

    let knn = build_knn_graph(&x, 2)?;
    println!();
    println!(
        "kNN graph (k=2, union-symmetrized): {} undirected edges",
        knn.undirected_edge_count()
    );
    for i in 0..knn.n() {
        let (neighbors, _) = knn.row(i);
        println!("  node {i} -> {neighbors:?}");
    }

    let normalized = normalize_adjacency(&knn, true)?;
    println!();
    println!("normalized operator rows (with self-loops):");
    for i in 0..normalized.n() {
        let (cols, vals) = normalized.operator().row(i);
        let entries: Vec<String> = cols
            .iter()
            .zip(vals)
            .map(|(j, v)| format!("({j}, {v:.3})"))
            .collect();
        println!("  node {i}: {}", entries.join(" "));
    }
    Ok(())
}

//! Cluster the bundled 19-generator KS matrix and print groups, KSGM and indices.
//!
//!     cargo run --example cluster_reference [-- path/to/matrix.csv]

use std::path::PathBuf;

use gridcoh::indices::analyze_matrix;
use gridcoh::model::{load_matrix, MatrixFormat};

fn main() -> gridcoh::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/ks19_reference.csv")
        });
    let (labels, ks) = load_matrix(&path, MatrixFormat::from_path(&path))?;
    let a = analyze_matrix(0.0, &ks)?;

    println!(
        "{} generators, {} groups, Q = {:.5}",
        labels.len(),
        a.partition.n_groups(),
        a.q
    );
    for (g, members) in a.partition.labeled_groups(&labels).iter().enumerate() {
        println!("  group {}: {}", g + 1, members.join(" "));
    }

    println!("\nKSGM");
    let n = a.ksgm.n_groups();
    for g in 0..n {
        let row: Vec<String> = (0..n)
            .map(|h| format!("{:8.3}", a.ksgm.get(g, h)))
            .collect();
        println!("  {}", row.join(""));
    }
    let ix = a.indices;
    println!(
        "\nGCI = {:.4}  GSI = {:.4}  SI = {:.3}",
        ix.gci, ix.gsi, ix.si
    );
    Ok(())
}

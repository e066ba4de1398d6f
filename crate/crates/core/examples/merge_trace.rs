//! Walk the greedy merge sequence and show how modularity evolves as groups are joined.

use std::path::PathBuf;

use gridcoh::clustering::{cluster, preprocess};
use gridcoh::model::{load_matrix, MatrixFormat};

fn main() -> gridcoh::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/ks19_reference.csv");
    let (labels, ks) = load_matrix(&path, MatrixFormat::Csv)?;
    let graph = preprocess(&ks)?;
    let (best, trace) = cluster(&graph);

    println!("start: {} singletons, Q = {:+.5}", trace.n, trace.q_initial);
    for (k, s) in trace.steps.iter().enumerate() {
        let mark = if k == trace.best_step {
            "  <- best"
        } else {
            ""
        };
        println!(
            "{:2}: {:>4} + {:<4} dQ = {:+.5}  Q = {:+.5}  ({} groups){mark}",
            k + 1,
            labels[s.a],
            labels[s.b],
            s.delta_q,
            s.q_after,
            trace.n - k - 1
        );
    }

    // Coarser or finer cuts of the same dendrogram.
    for k in [2, 3, best.n_groups(), 5] {
        let p = trace.partition_with_groups(k).expect("k within range");
        let groups: Vec<String> = p
            .labeled_groups(&labels)
            .iter()
            .map(|g| format!("{{{}}}", g.join(",")))
            .collect();
        println!("\n{k} groups: {}", groups.join(" "));
    }
    Ok(())
}

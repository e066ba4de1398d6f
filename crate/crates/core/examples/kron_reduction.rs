//! Reduce a small bus network to its generator internal nodes.
//!
//! Three buses in a line, generators on the two ends, a load modelled as a shunt admittance
//! on the middle bus.

use gridcoh::swingsim::{kron_reduce, FullNetwork};

fn main() -> gridcoh::Result<()> {
    // Line reactances 0.1 and 0.2 pu; load shunt 0.5 - j0.2 at bus 1.
    let (y01, y12) = (1.0 / 0.1, 1.0 / 0.2);
    let g = vec![
        vec![0.0, 0.0, 0.0],
        vec![0.0, 0.5, 0.0],
        vec![0.0, 0.0, 0.0],
    ];
    let b = vec![
        vec![-y01, y01, 0.0],
        vec![y01, -y01 - y12 - 0.2, y12],
        vec![0.0, y12, -y12],
    ];
    let full = FullNetwork::from_parts(&g, &b, vec![0, 2])?;

    let buses = kron_reduce(&full, None)?;
    println!("generator buses kept (cond {:.1}):", buses.condition);
    print_net(&buses.network);

    let internal = kron_reduce(&full, Some(&[0.25, 0.3]))?;
    println!(
        "\ninternal EMF nodes, x'd = 0.25, 0.3 (cond {:.1}):",
        internal.condition
    );
    print_net(&internal.network);
    Ok(())
}

fn print_net(net: &gridcoh::model::ReducedNetwork) {
    for i in 0..net.dim() {
        let row: Vec<String> = (0..net.dim())
            .map(|j| format!("{:8.4}{:+8.4}j", net.g().get(i, j), net.b().get(i, j)))
            .collect();
        println!("  {}", row.join("  "));
    }
}

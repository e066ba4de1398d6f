//! Integrator sanity check on a lossless, undamped two-machine system: the transient energy
//! should be conserved, and its drift should shrink about 16x each time the step is halved.

use gridcoh::model::{MachineSet, ReducedNetwork, RotorSnapshot, SymmetricMatrix};
use gridcoh::swingsim::{find_equilibrium, simulate, transient_energy, NamedNetwork, SimConfig};

fn main() -> gridcoh::Result<()> {
    let machines = MachineSet::new(
        vec!["A".into(), "B".into()],
        vec![0.1, 0.2],
        vec![0.0, 0.0],
        vec![0.5, -0.5],
        vec![1.0, 1.0],
    )?;
    let mut b = SymmetricMatrix::zeros(2);
    b.set(0, 1, 5.0);
    let net = NamedNetwork::new("tie", ReducedNetwork::lossless(b));

    let eq = find_equilibrium(&machines, &net.net, &[0.0, 0.0], 0)?;
    println!("equilibrium angles: {:?}", eq.delta);
    // Kick machine A off equilibrium.
    let init = RotorSnapshot::new(0.0, eq.delta.clone()).with_speed(vec![2.0, 0.0]);

    let mut previous: Option<f64> = None;
    for h in [0.02, 0.01, 0.005] {
        let cfg = SimConfig {
            t_end: 10.0,
            h,
            sample_every: 1,
            ..SimConfig::default()
        };
        let out = simulate(&machines, &net, &[], &cfg, &init)?;
        let energy: Vec<f64> = out
            .trajectory
            .samples()
            .iter()
            .map(|s| transient_energy(&machines, &net.net, &s.delta, s.speed.as_deref().unwrap()))
            .collect();
        let drift = energy
            .iter()
            .map(|e| (e - energy[0]).abs())
            .fold(0.0, f64::max);
        let ratio = previous.map_or(String::new(), |p| format!("  ratio {:.1}", p / drift));
        println!("h = {h:<6} max energy drift {drift:.3e}{ratio}");
        previous = Some(drift);
    }
    Ok(())
}

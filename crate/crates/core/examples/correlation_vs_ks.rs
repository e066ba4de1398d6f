//! Compare the two coherency measures on the demo scenario: KS at one instant, against the
//! rotor-angle correlation over the trailing window ending at the same instant.

use std::path::PathBuf;

use gridcoh::coherency::{cc_matrix, ks_matrix, DEFAULT_CC_WINDOW};
use gridcoh::indices::analyze_matrix;
use gridcoh::model::SymmetricMatrix;
use gridcoh::swingsim::Scenario;

fn main() -> gridcoh::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/demo.json");
    let scenario = Scenario::load(&path)?;
    let out = scenario.run()?;
    let traj = &out.trajectory;
    let ids = traj.ids();

    for t in [2.0, 4.0, 10.0] {
        let k = traj.index_at_or_before(t).expect("t inside trajectory");
        let snap = &traj.samples()[k];
        let ks = ks_matrix(snap, &scenario.machines, &out.schedule.at(snap.t)?.net)?;
        let cc = cc_matrix(traj, t, DEFAULT_CC_WINDOW)?;
        println!("t = {t} s");
        show("KS", &ks.m, ids);
        show("CC", &cc.m, ids);
        for (name, m) in [("KS", &ks.m), ("CC", &cc.m)] {
            let a = analyze_matrix(t, m)?;
            println!("  {name} groups: {:?}", a.partition.labeled_groups(ids));
        }
        println!();
    }
    Ok(())
}

fn show(name: &str, m: &SymmetricMatrix, ids: &[String]) {
    println!("  {name}");
    for (i, id) in ids.iter().enumerate() {
        let row: Vec<String> = m.row(i).map(|v| format!("{v:8.3}")).collect();
        println!("  {id:>4}{}", row.join(""));
    }
}

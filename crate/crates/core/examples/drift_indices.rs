//! Two areas whose tie lines are weakened step by step: GSI falls and SI climbs while the
//! grouping stays put. This is the signature the indices are meant to expose before the
//! areas actually separate.

use std::path::PathBuf;

use gridcoh::indices::{indices_series, SeriesOptions};
use gridcoh::swingsim::Scenario;

fn main() -> gridcoh::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/drift.json");
    let scenario = Scenario::load(&path)?;
    let out = scenario.run()?;
    let series = indices_series(
        &out.trajectory,
        &scenario.machines,
        &out.schedule,
        &SeriesOptions::default(),
    )?;

    println!("    t      GSI       SI  groups");
    for a in &series {
        let ix = a.indices;
        let bar = "#".repeat((ix.si / 4.0) as usize);
        println!(
            "{:5.1} {:8.4} {:8.2} {:7}  {bar}",
            ix.t, ix.gsi, ix.si, ix.n_groups
        );
    }
    Ok(())
}

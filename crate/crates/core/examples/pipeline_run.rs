//! The same stages the `coherency` binary runs, driven from code: simulate a scenario to
//! disk, analyze it, and list what was written.

use std::path::PathBuf;

use gridcoh::indices::SeriesOptions;
use gridcoh::pipeline::{
    cmd_analyze, cmd_simulate, AnalyzeOptions, SEGMENTS_FILE, TRAJECTORY_FILE,
};

fn main() -> gridcoh::Result<()> {
    let scenario = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/demo.json");
    let out = std::env::temp_dir().join("coherency-pipeline-example");
    let sim_dir = out.join("sim");
    let ana_dir = out.join("analysis");

    let sim = cmd_simulate(&scenario, &sim_dir)?;
    println!("simulated {} samples", sim.n_samples);

    let opts = AnalyzeOptions {
        series: SeriesOptions {
            stride: 10,
            jobs: 4,
            ..SeriesOptions::default()
        },
        write_matrices: false,
    };
    let report = cmd_analyze(
        &sim_dir.join(TRAJECTORY_FILE),
        Some(&sim_dir.join(SEGMENTS_FILE)),
        &ana_dir,
        &opts,
    )?;
    println!("analyzed {} snapshots", report.analyses.len());

    for (dir, manifest) in [(&sim_dir, &sim.manifest), (&ana_dir, &report.manifest)] {
        println!("\n{}", dir.display());
        for f in &manifest.outputs {
            println!("  {:<22} {}", f.path, &f.sha256[..16]);
        }
        for s in &manifest.stages {
            println!("  {:<10} {:.3} s", s.stage, s.seconds);
        }
    }
    Ok(())
}

//! Command implementations behind the `coherency` binary.
//!
//! Each command reads its inputs, runs one stage, and writes plain files into an output
//! location. Outputs are deterministic for identical inputs; the only varying content (stage
//! timings) is confined to `manifest.json`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::clustering::{cluster, modularity, preprocess};
use crate::coherency::{cc_matrix, cc_matrix_at, ks_matrix};
use crate::error::{Error, Result};
use crate::indices::{
    analyze_matrix, indices_series, series_sample_indices, IntegrityIndices, Method, SeriesOptions,
    SnapshotAnalysis,
};
use crate::model::{
    load_matrix, load_network_schedule, load_trajectory, save_indices_series, save_matrix,
    save_segment_manifest, save_trajectory, MachineSet, MatrixFormat, NetworkSchedule, Trajectory,
    TrajectoryFormat,
};
use crate::swingsim::Scenario;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SPEED_FILE: &str = "trajectory.speed.csv";
pub const SEGMENTS_FILE: &str = "segments.json";
pub const INDICES_FILE: &str = "indices.csv";
pub const PARTITIONS_FILE: &str = "partitions.jsonl";
pub const MATRICES_DIR: &str = "matrices";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// Record of one command run: what went in, how it was configured, what came out.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub inputs: Vec<PathBuf>,
    pub config: serde_json::Value,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    fn new(command: &'static str, inputs: Vec<PathBuf>, config: serde_json::Value) -> Self {
        Self {
            tool: "coherency",
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs,
            config,
            stages: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.stages.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(out)
    }

    fn record(&mut self, out_dir: &Path, rel: &str) -> Result<()> {
        let path = out_dir.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        self.outputs.push(OutputFile {
            path: rel.to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(&path, e))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub n_samples: usize,
    pub warnings: Vec<String>,
    pub manifest: RunManifest,
}

/// Runs a scenario and writes the trajectory, its speed companion and the segment manifest.
pub fn cmd_simulate(scenario_path: &Path, out_dir: &Path) -> Result<SimulateReport> {
    let mut manifest = RunManifest::new("simulate", vec![scenario_path.to_path_buf()], json!({}));
    let scenario = manifest.time("load", || Scenario::load(scenario_path))?;
    manifest.config = json!({
        "sim": scenario.config,
        "initial_network": scenario.initial_network,
        "n_events": scenario.events.len(),
    });
    let out = manifest.time("simulate", || scenario.run())?;
    ensure_dir(out_dir)?;
    manifest.time("write", || {
        save_trajectory(
            &out.trajectory,
            out_dir.join(TRAJECTORY_FILE),
            TrajectoryFormat::Csv,
        )?;
        save_segment_manifest(
            &scenario.machines,
            &out.schedule,
            out_dir.join(SEGMENTS_FILE),
        )
    })?;
    for rel in [TRAJECTORY_FILE, SPEED_FILE, SEGMENTS_FILE] {
        manifest.record(out_dir, rel)?;
    }
    manifest.write(out_dir)?;
    Ok(SimulateReport {
        n_samples: out.trajectory.len(),
        warnings: out.warnings,
        manifest,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AnalyzeOptions {
    pub series: SeriesOptions,
    /// Also write the coherency matrix of every analyzed snapshot.
    pub write_matrices: bool,
}

#[derive(Debug, Clone)]
pub struct AnalyzeReport {
    pub analyses: Vec<SnapshotAnalysis>,
    pub labels: Vec<String>,
    pub manifest: RunManifest,
}

impl AnalyzeReport {
    pub fn indices(&self) -> Vec<IntegrityIndices> {
        self.analyses.iter().map(|a| a.indices).collect()
    }
}

#[derive(Serialize)]
struct PartitionLine<'a> {
    t: f64,
    groups: &'a [Vec<String>],
}

fn write_series(out_dir: &Path, labels: &[String], analyses: &[SnapshotAnalysis]) -> Result<()> {
    let rows: Vec<IntegrityIndices> = analyses.iter().map(|a| a.indices).collect();
    save_indices_series(&rows, out_dir.join(INDICES_FILE))?;
    let path = out_dir.join(PARTITIONS_FILE);
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for a in analyses {
        let groups = a.partition.labeled_groups(labels);
        let line = PartitionLine {
            t: a.indices.t,
            groups: &groups,
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| Error::json(&path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

fn matrix_file(k: usize) -> String {
    format!("{MATRICES_DIR}/snapshot_{k:06}.csv")
}

/// Writes the coherency matrix behind every analyzed sample, recomputed from the inputs.
fn write_matrices(
    out_dir: &Path,
    traj: &Trajectory,
    machines: &MachineSet,
    schedule: &NetworkSchedule,
    opts: &SeriesOptions,
) -> Result<Vec<String>> {
    ensure_dir(&out_dir.join(MATRICES_DIR))?;
    let mut written = Vec::new();
    for k in series_sample_indices(traj, opts)? {
        let m = match opts.method {
            Method::Ks => {
                let snap = &traj.samples()[k];
                ks_matrix(snap, machines, &schedule.at(snap.t)?.net)?.m
            }
            Method::Cc(n) => cc_matrix_at(traj, k, n)?.m,
        };
        let rel = matrix_file(k);
        save_matrix(&m, traj.ids(), out_dir.join(&rel), MatrixFormat::Csv)?;
        written.push(rel);
    }
    Ok(written)
}

/// Indices and partitions over a trajectory.
///
/// `network` is a segment manifest written by `simulate` or a plain network file; it is
/// required for the KS method and ignored for CC.
pub fn cmd_analyze(
    traj_path: &Path,
    network: Option<&Path>,
    out_dir: &Path,
    opts: &AnalyzeOptions,
) -> Result<AnalyzeReport> {
    let mut inputs = vec![traj_path.to_path_buf()];
    inputs.extend(network.map(Path::to_path_buf));
    let mut manifest = RunManifest::new(
        "analyze",
        inputs,
        json!({ "series": opts.series, "write_matrices": opts.write_matrices }),
    );
    let (traj, machines, schedule) = manifest.time("load", || {
        let traj = load_trajectory(traj_path, TrajectoryFormat::from_path(traj_path))?;
        let (machines, schedule) = match (opts.series.method, network) {
            (_, Some(p)) => load_network_schedule(p)?,
            (Method::Cc(_), None) => (
                MachineSet::uniform(traj.ids().to_vec())?,
                NetworkSchedule::default(),
            ),
            (Method::Ks, None) => {
                return Err(Error::invalid(
                    "the KS method needs a network or segment file",
                ))
            }
        };
        if machines.ids() != traj.ids() {
            return Err(Error::invalid(format!(
                "trajectory generators {:?} do not match network generators {:?}",
                traj.ids(),
                machines.ids()
            )));
        }
        Ok((traj, machines, schedule))
    })?;
    let analyses = manifest.time("analyze", || {
        indices_series(&traj, &machines, &schedule, &opts.series)
    })?;
    ensure_dir(out_dir)?;
    let labels = traj.ids().to_vec();
    let matrices = manifest.time("write", || {
        write_series(out_dir, &labels, &analyses)?;
        if opts.write_matrices {
            write_matrices(out_dir, &traj, &machines, &schedule, &opts.series)
        } else {
            Ok(Vec::new())
        }
    })?;
    for rel in [INDICES_FILE, PARTITIONS_FILE] {
        manifest.record(out_dir, rel)?;
    }
    for rel in &matrices {
        manifest.record(out_dir, rel)?;
    }
    manifest.write(out_dir)?;
    Ok(AnalyzeReport {
        analyses,
        labels,
        manifest,
    })
}

/// Treats a stored matrix as a single snapshot at `t = 0` and writes the same outputs as
/// [`cmd_analyze`].
pub fn cmd_analyze_matrix(matrix_path: &Path, out_dir: &Path) -> Result<AnalyzeReport> {
    let mut manifest = RunManifest::new(
        "analyze",
        vec![matrix_path.to_path_buf()],
        json!({ "matrix": true }),
    );
    let (labels, m) = manifest.time("load", || {
        load_matrix(matrix_path, MatrixFormat::from_path(matrix_path))
    })?;
    let analysis = manifest.time("analyze", || analyze_matrix(0.0, &m))?;
    ensure_dir(out_dir)?;
    let analyses = vec![analysis];
    manifest.time("write", || write_series(out_dir, &labels, &analyses))?;
    for rel in [INDICES_FILE, PARTITIONS_FILE] {
        manifest.record(out_dir, rel)?;
    }
    manifest.write(out_dir)?;
    Ok(AnalyzeReport {
        analyses,
        labels,
        manifest,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionReport {
    pub groups: Vec<Vec<String>>,
    #[serde(rename = "Q")]
    pub q: f64,
}

/// Clusters a stored coherency matrix and writes `{"groups": [[...]], "Q": ...}`.
pub fn cmd_cluster(matrix_path: &Path, out_path: &Path) -> Result<PartitionReport> {
    let (labels, m) = load_matrix(matrix_path, MatrixFormat::from_path(matrix_path))?;
    let graph = preprocess(&m)?;
    let (partition, _) = cluster(&graph);
    let report = PartitionReport {
        groups: partition.labeled_groups(&labels),
        q: modularity(&graph, &partition)?,
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::json(out_path, e))? + "\n";
    std::fs::write(out_path, text).map_err(|e| Error::io(out_path, e))?;
    Ok(report)
}

/// Correlation matrix over the `n` samples ending at or before `t`.
pub fn cmd_cc(traj_path: &Path, t: f64, n: usize, out_path: &Path) -> Result<()> {
    let traj = load_trajectory(traj_path, TrajectoryFormat::from_path(traj_path))?;
    let cc = cc_matrix(&traj, t, n)?;
    save_matrix(
        &cc.m,
        traj.ids(),
        out_path,
        MatrixFormat::from_path(out_path),
    )
}

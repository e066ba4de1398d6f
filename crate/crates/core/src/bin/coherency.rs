use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gridcoh::coherency::DEFAULT_CC_WINDOW;
use gridcoh::indices::{Method, SeriesOptions};
use gridcoh::pipeline::{self, AnalyzeOptions};

/// Generator coherency grouping and grid integrity indices.
#[derive(Parser)]
#[command(name = "coherency", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ks,
    Cc,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file; writes trajectory.csv, trajectory.speed.csv and segments.json.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Indices and partitions over a trajectory; writes indices.csv and partitions.jsonl.
    Analyze {
        /// Trajectory CSV or JSON.
        #[arg(long, required_unless_present = "matrix")]
        trajectory: Option<PathBuf>,
        /// Segment manifest from `simulate`, or a network JSON. Needed for `--method ks`.
        #[arg(long)]
        network: Option<PathBuf>,
        /// Analyze a single stored coherency matrix instead of a trajectory.
        #[arg(long, conflicts_with_all = ["trajectory", "network"])]
        matrix: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "ks")]
        method: MethodArg,
        #[arg(long, default_value_t = DEFAULT_CC_WINDOW)]
        cc_window: usize,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also write every snapshot's coherency matrix under matrices/.
        #[arg(long)]
        write_matrices: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Cluster a coherency matrix CSV; writes {"groups": [...], "Q": ...}.
    Cluster {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value = "partition.json")]
        out: PathBuf,
    },
    /// Rotor-angle correlation matrix over the `n` samples ending at time `t`.
    Cc {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = DEFAULT_CC_WINDOW)]
        n: usize,
        #[arg(long, default_value = "cc.csv")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> gridcoh::Result<()> {
    match cli.command {
        Command::Simulate { scenario, out } => {
            let report = pipeline::cmd_simulate(&scenario, &out)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("{} samples written to {}", report.n_samples, out.display());
        }
        Command::Analyze {
            trajectory,
            network,
            matrix,
            method,
            cc_window,
            stride,
            jobs,
            write_matrices,
            out,
        } => {
            let report = match (matrix, trajectory) {
                (Some(m), _) => pipeline::cmd_analyze_matrix(&m, &out)?,
                (None, Some(traj)) => {
                    let method = match method {
                        MethodArg::Ks => Method::Ks,
                        MethodArg::Cc => Method::Cc(cc_window),
                    };
                    let opts = AnalyzeOptions {
                        series: SeriesOptions {
                            method,
                            stride,
                            jobs,
                        },
                        write_matrices,
                    };
                    pipeline::cmd_analyze(&traj, network.as_deref(), &out, &opts)?
                }
                (None, None) => unreachable!("clap requires --trajectory or --matrix"),
            };
            eprintln!(
                "{} snapshots analyzed into {}",
                report.analyses.len(),
                out.display()
            );
        }
        Command::Cluster { matrix, out } => {
            let report = pipeline::cmd_cluster(&matrix, &out)?;
            eprintln!("{} groups, Q = {:.5}", report.groups.len(), report.q);
        }
        Command::Cc {
            trajectory,
            t,
            n,
            out,
        } => pipeline::cmd_cc(&trajectory, t, n, &out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

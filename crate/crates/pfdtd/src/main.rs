//! Command-line front end: scenario configuration, the five workflows
//! (full, sweep, edge, merge, converge) plus standalone record analysis,
//! with deterministic artifact directories.
//!
//! Exit codes: 0 success, 2 config error, 3 simulation failure, 4 missing
//! prerequisite artifact.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use pfdtd::commands;
use pfdtd::error::Result;
use pfdtd::scenario::EdgeSide;

#[derive(Parser)]
#[command(name = "pfdtd", version, about = "2D FDTD engine for finite periodic structures")]
struct Cli {
    /// Scenario config file (TOML); keys override the selected profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides the config's output.dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker count for sweeps (0 = available parallelism). Never affects
    /// numerical results.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Built-in scenario profile.
    #[arg(long, global = true, default_value = "desk")]
    profile: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full finite-structure simulation (the oracle path).
    Full,
    /// Phased unit-cell sweep; resumable, writes records and a manifest.
    Sweep,
    /// One edge simulation driven by TF/SF replay of the de-imaged records.
    Edge {
        /// Which structure edge to simulate.
        #[arg(long, value_parser = parse_side)]
        side: EdgeSide,
        /// Edge unit cells N^E; defaults to the largest scheduled value.
        #[arg(long)]
        n_edge: Option<usize>,
    },
    /// Merge the inner estimate with both edge runs into continuous lines.
    Merge {
        #[arg(long)]
        n_edge: Option<usize>,
    },
    /// Edge-growth convergence search over the configured schedule.
    Converge,
    /// Single-frequency DFT of a boundary record's Ez samples.
    Dft {
        /// Input record (.prec).
        #[arg(long)]
        input: PathBuf,
        /// Analysis frequency; defaults to the scenario's f_op.
        #[arg(long)]
        f_hz: Option<f64>,
        /// Output CSV path; defaults next to the input.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_side(s: &str) -> std::result::Result<EdgeSide, String> {
    match s {
        "low" => Ok(EdgeSide::Low),
        "high" => Ok(EdgeSide::High),
        other => Err(format!("side must be low or high, got {other:?}")),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut scn = commands::load_scenario(&cli.profile, cli.config.as_deref())?;
    if let Some(w) = cli.workers {
        scn.workers = w;
    }
    if let Some(out) = &cli.out {
        scn.output.dir = out.display().to_string();
    }
    let out_root = scn.output_dir();
    let workers = scn.workers;

    match cli.command {
        Command::Full => println!("{}", commands::full(&scn, &out_root)?),
        Command::Sweep => println!("{}", commands::sweep(&scn, &out_root, workers)?),
        Command::Edge { side, n_edge } => {
            println!("{}", commands::edge(&scn, &out_root, side, n_edge)?)
        }
        Command::Merge { n_edge } => println!("{}", commands::merge(&scn, &out_root, n_edge)?),
        Command::Converge => {
            let (report, msg) = commands::converge(&scn, &out_root)?;
            for e in &report.entries {
                println!(
                    "converge: N^E={:3}  raw={:.6e}  normalized={:.4}  converged={}",
                    e.n_edge, e.raw, e.normalized, e.converged
                );
            }
            println!("{msg}");
        }
        Command::Dft { input, f_hz, output } => {
            println!("{}", commands::dft(&scn, &input, f_hz, output)?)
        }
    }
    Ok(())
}

//! `qanneal`: run gap studies from the command line.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qanneal::catalysts::{connected_sets, hierarchy_filter};
use qanneal::experiments::{run_custom, run_preset, ExperimentConfig, Preset, RunOptions, RunReport, DEFAULT_SEED};
use qanneal::graph::{brute_force_mwis, WeightedGraph};
use qanneal::Result;
use serde_json::json;

#[derive(Parser)]
#[command(name = "qanneal", version, about = "Spectral-gap studies of catalyzed quantum annealing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named study (fig2, fig3, fig4, fig5, fig6, fig8, appB, appC).
    Preset {
        name: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the instance and catalysts described by a JSON file.
    Custom {
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the maximum-weight independent set of a graph JSON file.
    Mwis { graph: PathBuf },
    /// Split the connected n-subsets of a graph by whether they contain an odd loop.
    Filter {
        graph: PathBuf,
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
    /// List the available presets.
    List,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads; defaults to every available core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 101)]
    grid_points: usize,
    /// Eigensolver residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Enumerate every placement instead of subsampling.
    #[arg(long)]
    full: bool,
    /// Ensemble size for appC.
    #[arg(long)]
    instances: Option<usize>,
    /// Subsample size for large enumerations.
    #[arg(long)]
    samples: Option<usize>,
    /// Comma-separated vertex weights for fig8.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Bound on the fig8 weight search.
    #[arg(long)]
    attempts: Option<usize>,
    /// Comma-separated system sizes for the scaling studies.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
}

impl From<RunArgs> for RunOptions {
    fn from(a: RunArgs) -> Self {
        RunOptions {
            seed: a.seed,
            workers: a.workers,
            out: a.out,
            grid_points: a.grid_points,
            tol: a.tol,
            full: a.full,
            instances: a.instances,
            samples: a.samples,
            weights: a.weights,
            attempts: a.attempts,
            sizes: a.sizes,
        }
    }
}

fn print_report(report: &RunReport) {
    for f in &report.files {
        println!("{}", f.display());
    }
}

fn read_graph(path: &PathBuf) -> Result<WeightedGraph> {
    WeightedGraph::from_json_str(&fs::read_to_string(path)?)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Preset { name, run } => print_report(&run_preset(&name, &run.into())?),
        Command::Custom { config, run } => {
            let config = ExperimentConfig::from_json_str(&fs::read_to_string(config)?)?;
            print_report(&run_custom(&config, &run.into())?);
        }
        Command::Mwis { graph } => {
            let mwis = brute_force_mwis(&read_graph(&graph)?)?;
            println!("{}", json!({"vertices": mwis.vertices, "weight": mwis.weight}));
        }
        Command::Filter { graph, n } => {
            let graph = read_graph(&graph)?;
            let candidates = connected_sets(&graph, n)?;
            let (kept, rejected) = hierarchy_filter(&graph, &candidates);
            println!(
                "{}",
                json!({"n": n, "candidates": candidates.len(), "kept": kept, "rejected": rejected})
            );
        }
        Command::List => {
            for p in Preset::ALL {
                println!("{}", p.name());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

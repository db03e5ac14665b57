use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "topoplan",
    version,
    about = "Multi-objective topology planning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic instance.
    Gen(GenArgs),
    /// Compute exact dominance fronts.
    Exact(ExactArgs),
    /// Run the evolutionary optimizer over several seeds.
    Moea(MoeaArgs),
    /// Score a MOEA run against exact fronts.
    Metrics(MetricsArgs),
    /// Compare the exact fronts with exhaustive enumeration.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub t_max: Option<usize>,
    /// Topologies per depth, e.g. `1:2,2:3`.
    #[arg(long)]
    pub depth_counts: Option<String>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Probability that a topology is unavailable at a step.
    #[arg(long)]
    pub drop_rate: Option<f64>,
    /// Range of per-topology base loadings, `lo:hi`.
    #[arg(long)]
    pub lf1_range: Option<String>,
    /// Exact number of available topologies per step, comma-separated.
    #[arg(long)]
    pub availability: Option<String>,
    /// Benchmark-scale instance: 24 steps, 252,094 topologies.
    #[arg(long, conflicts_with_all = ["t_max", "depth_counts", "drop_rate", "availability"])]
    pub benchmark_scale: bool,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub d_max: u32,
    #[arg(long)]
    pub s_max: usize,
    #[arg(long, default_value_t = 10)]
    pub fronts: usize,
    /// Count only strategies whose non-reference blocks differ from their neighbours.
    #[arg(long)]
    pub strict_adjacency: bool,
    /// Print the predicted and the instrumented evaluation counts.
    #[arg(long)]
    pub count_evals: bool,
    #[arg(long, default_value = "front.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MoeaArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Named configuration `pm{05,10,15,20}-{S,M,L}`.
    #[arg(long)]
    pub config: Option<String>,
    #[arg(long)]
    pub l_bar: Option<usize>,
    #[arg(long)]
    pub d_bar: Option<usize>,
    #[arg(long)]
    pub pm: Option<f64>,
    /// Crossover probability; defaults to `1 - pm`.
    #[arg(long)]
    pub pc: Option<f64>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub d_max: u32,
    #[arg(long, default_value_t = 5)]
    pub s_max: usize,
    #[arg(long, default_value_t = 2)]
    pub k_crossover: usize,
    #[arg(long, default_value_t = 100)]
    pub reference_directions: usize,
    #[arg(long, default_value_t = 15)]
    pub seeds: usize,
    #[arg(long)]
    pub seed_base: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// `front.csv` from `exact`.
    #[arg(long)]
    pub reference: PathBuf,
    /// Run directory from `moea`.
    #[arg(long)]
    pub approx: PathBuf,
    /// `auto`, `benchmark`, or a JSON file with `ideal` and `maximum`.
    #[arg(long, default_value = "auto")]
    pub bounds: String,
    #[arg(long, default_value_t = 10)]
    pub fronts: usize,
    /// Defaults to `metrics.csv` inside the run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub d_max: u32,
    #[arg(long)]
    pub s_max: usize,
    #[arg(long, default_value_t = 3)]
    pub fronts: usize,
    /// Largest strategy space to enumerate.
    #[arg(long, default_value_t = 10_000_000)]
    pub limit: u128,
    /// Check this `front.csv` instead of recomputing the exact fronts.
    #[arg(long)]
    pub front: Option<PathBuf>,
}

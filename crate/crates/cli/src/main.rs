//! `gridcf`: map generation, task sampling, supervision export, solving and reporting.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error. Environment
//! variables are never consulted; all randomness derives from `--seed`.

mod commands;
mod manifest;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "gridcf", version, about = "Grid pathfinding benchmark pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate training maps (uniform, beta, beta_figures).
    GenTrain(GenTrainArgs),
    /// Generate procedural evaluation maps.
    GenUpf(GenUpfArgs),
    /// Convert external source maps to the target resolution.
    Ingest(IngestArgs),
    /// Sample filtered start/goal tasks from a directory of maps.
    GenTasks(GenTasksArgs),
    /// Write exact correction-factor fields (training supervision) for every task.
    ComputeCf(ComputeCfArgs),
    /// Run one solver over a task file.
    Solve(SolveArgs),
    /// Aggregate run files against a baseline into CSV tables and SVG plots.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CommonGen {
    /// Number of maps to write.
    #[arg(long)]
    pub count: usize,
    /// Side length of the (square) maps.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Base seed; map i uses seed + i.
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenTrainArgs {
    #[arg(long, value_parser = ["uniform", "beta", "beta_figures"])]
    pub kind: String,
    #[command(flatten)]
    pub common: CommonGen,
    /// Blocking probability for uniform maps.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 8)]
    pub figures_min: usize,
    #[arg(long, default_value_t = 24)]
    pub figures_max: usize,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct GenUpfArgs {
    #[arg(long, value_parser = gridcf::gen::upf::Topology::NAMES)]
    pub topology: String,
    #[command(flatten)]
    pub common: CommonGen,
    /// Recursive division: probability of opening each wall cell.
    #[arg(long, default_value_t = 0.2)]
    pub flip_prob: f64,
    /// Perlin: treat cells beyond the border as free instead of blocked.
    #[arg(long)]
    pub perlin_free_border: bool,
    /// Dcaffo / rotational symmetry / perlin noise density.
    #[arg(long, default_value_t = 0.5)]
    pub density: f64,
    /// Dcaffo closing radius (1 = 3x3).
    #[arg(long, default_value_t = 1)]
    pub closing_radius: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, value_parser = ["baldurs_gate", "moving_street", "house_expo", "tmp"])]
    pub kind: String,
    #[arg(long)]
    pub src_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonGen,
    #[arg(long, default_value = "majority", value_parser = ["majority", "any", "center"])]
    pub downsample_rule: String,
    /// Required side of Baldur's Gate source maps.
    #[arg(long, default_value_t = 512)]
    pub bg_source_side: usize,
}

#[derive(Debug, Args)]
pub struct GenTasksArgs {
    #[arg(long)]
    pub maps_dir: PathBuf,
    #[arg(long)]
    pub per_map: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = gridcf::tasks::DEFAULT_H_MIN)]
    pub h_min: f64,
    #[arg(long, default_value_t = gridcf::tasks::DEFAULT_COMPLEXITY_FACTOR)]
    pub complexity_factor: f64,
    #[arg(long, default_value_t = gridcf::tasks::DEFAULT_MAX_ATTEMPTS)]
    pub max_attempts: usize,
    #[arg(long)]
    pub no_corner_cutting: bool,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ComputeCfArgs {
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub no_corner_cutting: bool,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub tasks: PathBuf,
    /// astar | wastar:<w> | cf:exact | cf:file | cf:one
    #[arg(long, value_parser = |s: &str| s.parse::<commands::solve::Solver>().map_err(|e| e.to_string()))]
    pub solver: commands::solve::Solver,
    /// Directory of `task_<id>.cfm` predictions (cf:file).
    #[arg(long)]
    pub cf_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Time heuristic loading in batches of these sizes (comma separated); enables a warm-up pass.
    #[arg(long, value_delimiter = ',')]
    pub batch_sizes: Vec<usize>,
    #[arg(long)]
    pub no_corner_cutting: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run files to compare (may repeat).
    #[arg(long, required = true, num_args = 1..)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub baseline: PathBuf,
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"
    )]
    pub lambdas: Vec<f64>,
    /// Prediction timing CSV from the trainer: `<solver>@<batch_size>=<path>` (may repeat).
    #[arg(long)]
    pub prediction_timing: Vec<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenTrain(a) => commands::generate::gen_train(&a),
        Command::GenUpf(a) => commands::generate::gen_upf(&a),
        Command::Ingest(a) => commands::generate::ingest(&a),
        Command::GenTasks(a) => commands::tasks::gen_tasks(&a),
        Command::ComputeCf(a) => commands::tasks::compute_cf(&a),
        Command::Solve(a) => commands::solve::solve(&a),
        Command::Report(a) => commands::report::report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! `srot` command-line front end: solve, bench, transfer, verify, report.

mod commands;
mod config;
mod csvio;
mod instance;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "srot",
    about = "Semi-relaxed optimal transport: solvers, benchmarks, and color transfer",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write plan, trace, and summary artifacts.
    Solve(SolveArgs),
    /// Run a (lambda x algorithm x seed) sweep and write run/aggregate CSVs.
    Bench(BenchArgs),
    /// Color-transfer one PPM image onto another's palette.
    Transfer(TransferArgs),
    /// Run the randomized verification batteries.
    Verify(VerifyArgs),
    /// Aggregate a bench runs CSV into median/IQR curves (and SVG charts).
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Relaxation parameter of the marginal penalty.
    #[arg(long)]
    lambda: Option<f64>,
    /// Algorithm: fw or bcfw.
    #[arg(long)]
    algo: Option<String>,
    /// Column sampling: uniform, permutation, or gap.
    #[arg(long)]
    sampling: Option<String>,
    /// Stepsize rule: dec or els.
    #[arg(long)]
    step: Option<String>,
    /// Direction variant: plain, away, or pairwise.
    #[arg(long)]
    variant: Option<String>,
    /// Stopping tolerance on the duality gap.
    #[arg(long)]
    eps: Option<f64>,
    /// Epoch budget.
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Epochs between duality-gap checks.
    #[arg(long)]
    gap_check_period: Option<usize>,
    /// Gap-adaptive sampling refreshes all stored gaps every M*n iterations.
    #[arg(long)]
    refresh_m: Option<usize>,
    /// RNG seed (ChaCha8; identical streams on every platform).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SolveArgs {
    /// Flat key=value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Read the instance from a srot-problem text file.
    #[arg(long, conflicts_with = "gen")]
    instance: Option<PathBuf>,
    /// Generate the instance instead ("random").
    #[arg(long)]
    gen: Option<String>,
    /// Rows (source bins) for --gen.
    #[arg(long)]
    m: Option<usize>,
    /// Columns (target bins) for --gen.
    #[arg(long)]
    n: Option<usize>,
    /// Seed for instance generation (defaults to --seed).
    #[arg(long)]
    gen_seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the LP reference (matrix/value error columns stay empty).
    #[arg(long)]
    no_lp: bool,
    /// Save the solved instance next to the other artifacts.
    #[arg(long)]
    save_instance: bool,
    /// Also emit an SVG chart of the trace.
    #[arg(long)]
    plot: bool,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Rows of the random benchmark instances.
    #[arg(long)]
    m: Option<usize>,
    /// Columns of the random benchmark instances.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated lambda grid, e.g. 1e-2,1e-3.
    #[arg(long)]
    lambdas: Option<String>,
    /// Comma-separated algorithm specs, e.g. bcfw-u-els,bcpfw-els,fw-dec.
    #[arg(long)]
    algos: Option<String>,
    /// Number of seeds per configuration.
    #[arg(long)]
    seeds: Option<u64>,
    /// Gap target as a fraction of the initial objective.
    #[arg(long)]
    eps_scale: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Record metrics every this many epochs.
    #[arg(long)]
    gap_check_period: Option<usize>,
    /// Skip the per-lambda LP reference (matrix/value errors stay empty).
    #[arg(long)]
    no_lp: bool,
    /// Worker pool size (capped by SROT_THREADS).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransferArgs {
    /// Source image (PPM P6).
    src: PathBuf,
    /// Reference image whose palette is transferred onto the source.
    reference: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Palette size for both images.
    #[arg(long)]
    k: Option<usize>,
    /// Output image path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace CSV path (next to the output image by default).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Comma-separated epochs at which to write intermediate images.
    #[arg(long)]
    snapshots: Option<String>,
    /// Skip the LP comparison in the trace.
    #[arg(long)]
    no_lp: bool,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct VerifyArgs {
    /// Random instances per battery.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Instance size range for the LP battery, e.g. 2..8.
    #[arg(long, default_value = "2..6")]
    sizes: String,
    /// Deliberately corrupt the gap-equivalence battery's gradient; the
    /// battery must then fail (suite sensitivity check).
    #[arg(long)]
    perturb_gradient: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// A srot-bench-runs CSV produced by the bench command.
    #[arg(long)]
    runs: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit one SVG chart per metric.
    #[arg(long)]
    svg: bool,
}

fn main() -> ExitCode {
    // missing/invalid flags exit 1 with the usage message, like every other
    // input error
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => commands::solve::run(args),
        Command::Bench(args) => commands::bench::run(args),
        Command::Transfer(args) => commands::transfer::run(args),
        Command::Verify(args) => commands::verify::run(args),
        Command::Report(args) => commands::report::run(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

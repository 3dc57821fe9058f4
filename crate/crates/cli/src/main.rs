use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::RangedU64ValueParser;
use clap::{Args, Parser, Subcommand};

mod commands;
mod svg;

use commands::{RangeArg, UsageError};

/// Supervised multidimensional scaling on labeled activations.
#[derive(Debug, Parser)]
#[command(name = "smds", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a synthetic manifold embedded in a high-dimensional space.
    Synth(SynthArgs),
    /// Generate a prompt corpus as JSON lines.
    GenPrompts(GenPromptsArgs),
    /// Fit one projection on a bundle.
    Fit(FitArgs),
    /// Cross-validated stress for every (bundle, distance) cell.
    Sweep(SweepArgs),
    /// Compare cross-validated stress on true and shuffled labels.
    Control(ControlArgs),
    /// Perturb a bundle's activations.
    Intervene(InterveneArgs),
    /// Nearest-neighbor label readout in projected coordinates.
    Decode(DecodeArgs),
    /// Rank correlation between per-key scores and accuracies.
    Correlate(CorrelateArgs),
    /// Per-cell summary of a sweep CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// circle, semicircle, line, log_line, clusters[:k], sphere or plane2d.
    #[arg(long)]
    shape: String,
    #[arg(long, value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    n: usize,
    #[arg(long, value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    dim: usize,
    /// Standard deviation of the isotropic noise, relative to the manifold scale.
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    noise: f64,
    #[arg(long, default_value_t = smds::synth::DEFAULT_SCALE, value_parser = positive)]
    scale: f64,
    #[arg(long)]
    seed: u64,
    /// Bundle directory to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "f64")]
    dtype: String,
}

#[derive(Debug, Args)]
struct GenPromptsArgs {
    #[arg(long)]
    task: String,
    #[arg(long, value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// JSON-lines file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitOptions {
    #[arg(long, default_value_t = smds::DEFAULT_M, value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    m: usize,
    #[arg(long, default_value_t = smds::DEFAULT_ALPHA, value_parser = non_negative)]
    alpha: f64,
    /// Range of raw scalar labels: `auto` (from the bundle's task), `none`, or `MIN,MAX`.
    #[arg(long, default_value = "auto", value_parser = commands::parse_range)]
    label_range: RangeArg,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    distance: String,
    #[command(flatten)]
    fit: FitOptions,
    /// Projection directory to write.
    #[arg(long)]
    out: PathBuf,
    /// Also draw the first two components of the bundle as an SVG scatter.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepOptions {
    /// A bundle directory, or a directory of bundle directories.
    #[arg(long)]
    bundle_dir: PathBuf,
    /// `all` or a comma-separated list of distance names.
    #[arg(long, default_value = "all")]
    distances: String,
    #[command(flatten)]
    fit: FitOptions,
    #[arg(long, default_value_t = 5, value_parser = RangedU64ValueParser::<usize>::new().range(2..))]
    folds: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "SMDS_JOBS", value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    sweep: SweepOptions,
}

#[derive(Debug, Args)]
struct ControlArgs {
    #[command(flatten)]
    sweep: SweepOptions,
    #[arg(long)]
    shuffle_seed: u64,
}

#[derive(Debug, Args)]
struct InterveneArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// manifold, full or random.
    #[arg(long)]
    mode: String,
    /// Noise variance; a comma-separated list writes one bundle per value.
    #[arg(long, value_delimiter = ',', required = true, value_parser = non_negative)]
    sigma2: Vec<f64>,
    #[arg(long, value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    subspace_dim: Option<usize>,
    #[arg(long)]
    projection: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Perturbed bundle directory (or parent directory for several sigma2 values).
    #[arg(long)]
    out: PathBuf,
    /// Write decode accuracy per sigma2 to this CSV (needs --train and --projection).
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Clean reference bundle for --curve.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long, default_value_t = smds::intervention::DEFAULT_TOLERANCE, value_parser = non_negative)]
    tolerance: f64,
    #[arg(long, default_value = "auto", value_parser = commands::parse_range)]
    label_range: RangeArg,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    projection: PathBuf,
    /// Fraction of the label range within which a scalar readout counts as correct.
    #[arg(long, default_value_t = smds::intervention::DEFAULT_TOLERANCE, value_parser = non_negative)]
    tolerance: f64,
    #[arg(long, default_value = "auto", value_parser = commands::parse_range)]
    label_range: RangeArg,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    /// CSV keyed by its first column.
    #[arg(long)]
    scores: PathBuf,
    /// CSV keyed by its first column.
    #[arg(long)]
    accuracies: PathBuf,
    /// Value column in --scores (default: the last column).
    #[arg(long)]
    score_column: Option<String>,
    /// Value column in --accuracies (default: the last column).
    #[arg(long)]
    accuracy_column: Option<String>,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    sweep: PathBuf,
    /// Write the summary here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a finite value >= 0, got {s}"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match non_negative(s)? {
        v if v > 0.0 => Ok(v),
        _ => Err(format!("expected a value > 0, got {s}")),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::GenPrompts(a) => commands::gen_prompts(a),
        Command::Fit(a) => commands::fit(a),
        Command::Sweep(a) => commands::sweep(a.sweep),
        Command::Control(a) => commands::control(a.sweep, a.shuffle_seed),
        Command::Intervene(a) => commands::intervene(a),
        Command::Decode(a) => commands::decode(a),
        Command::Correlate(a) => commands::correlate(a),
        Command::Report(a) => commands::report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

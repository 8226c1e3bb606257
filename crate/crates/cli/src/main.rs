//! `amrdmd`: simulate, project, fit DMD, predict and report.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime
//! failure, 4 refused to overwrite an existing output.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;
pub const EXIT_SAFETY: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Safety(String),
    #[error(transparent)]
    Core(#[from] amrdmd::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use amrdmd::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::Safety(_) => EXIT_SAFETY,
            CliError::Core(e) => match e.root() {
                E::Parse { .. } | E::InvalidArgument(_) => EXIT_USAGE,
                _ => EXIT_RUNTIME,
            },
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "amrdmd", version, about = "DMD for snapshots computed on adaptive meshes")]
struct Cli {
    /// Seed for randomized stages (mesh jitter, synthetic data, randomized SVD).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replace existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the scenario of a config file and write its snapshot store.
    Simulate { config: PathBuf, out_dir: PathBuf },
    /// Self-contained demonstrations.
    #[command(subcommand)]
    Demo(DemoCommand),
    /// L²-project every snapshot of a store onto a target mesh.
    Project {
        store: PathBuf,
        target_mesh: PathBuf,
        out_dir: PathBuf,
    },
    /// Fit and evaluate DMD models.
    #[command(subcommand)]
    Dmd(DmdCommand),
    /// Error tables and quantities of interest.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Subcommand, Debug)]
enum DemoCommand {
    /// Project an indicator function from an adapted mesh onto two meshes.
    Indicator {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum DmdCommand {
    Fit(FitArgs),
    Predict(PredictArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SvdChoice {
    Exact,
    Randomized,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum AmplitudeChoice {
    /// Fit the first training snapshot.
    First,
    /// Least squares over all training snapshots.
    All,
}

/// Fit a DMD model to one field of a uniform store.
#[derive(Args, Debug)]
#[command(group(ArgGroup::new("rank_spec").required(true).args(["rank", "tau"])))]
pub struct FitArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub field: String,
    /// Training window `first:last`, as snapshot times.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub rank: Option<usize>,
    /// Hard threshold on the discarded variance.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_enum, default_value_t = SvdChoice::Exact)]
    pub svd: SvdChoice,
    #[arg(long, default_value_t = 10)]
    pub oversample: usize,
    #[arg(long, default_value_t = 2)]
    pub power_iters: usize,
    #[arg(long, value_enum, default_value_t = AmplitudeChoice::First)]
    pub amplitudes: AmplitudeChoice,
    #[arg(long)]
    pub out: PathBuf,
}

/// Evaluate a model and write the result as a store.
#[derive(Args, Debug)]
#[command(group(ArgGroup::new("when").required(true).args(["times", "until"])))]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Mesh the model's nodal values live on.
    #[arg(long)]
    pub mesh: PathBuf,
    /// Comma-separated evaluation times.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Every sampling interval from the model's first time up to this one.
    #[arg(long)]
    pub until: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum ReportCommand {
    /// Per-snapshot relative errors of `approx` against `truth`.
    Errors(ErrorsArgs),
    /// A quantity of interest over every snapshot of a store.
    Qoi(QoiArgs),
}

#[derive(Args, Debug)]
pub struct ErrorsArgs {
    pub truth: PathBuf,
    pub approx: PathBuf,
    #[arg(long)]
    pub field: String,
    /// Snapshots after this time count as prediction.
    #[arg(long)]
    pub split_time: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum QoiKind {
    /// Normalized total population.
    Population,
    /// Furthest extent of `{field ≥ threshold}` along `axis`.
    Front,
    /// Centroid coordinate of `{field ≥ threshold}` along `axis`.
    Center,
    /// Measure of `{field ≥ threshold}`.
    Measure,
}

#[derive(Args, Debug)]
pub struct QoiArgs {
    pub store: PathBuf,
    #[arg(long, value_enum, default_value_t = QoiKind::Population)]
    pub kind: QoiKind,
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub axis: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub struct Globals {
    pub seed: Option<u64>,
    pub force: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Info };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();
    let g = Globals {
        seed: cli.seed,
        force: cli.force,
    };
    let result = match cli.command {
        Command::Simulate { config, out_dir } => commands::simulate(&g, &config, &out_dir),
        Command::Demo(DemoCommand::Indicator { out }) => commands::demo_indicator(&g, &out),
        Command::Project {
            store,
            target_mesh,
            out_dir,
        } => commands::project(&g, &store, &target_mesh, &out_dir),
        Command::Dmd(DmdCommand::Fit(a)) => commands::dmd_fit(&g, &a),
        Command::Dmd(DmdCommand::Predict(a)) => commands::dmd_predict(&g, &a),
        Command::Report(ReportCommand::Errors(a)) => commands::report_errors(&g, &a),
        Command::Report(ReportCommand::Qoi(a)) => commands::report_qoi(&g, &a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

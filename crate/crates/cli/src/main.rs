mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;
use warpwatch::{Aggregator, Execution, ThresholdMode};

#[derive(Parser)]
#[command(
    name = "warpwatch",
    version,
    about = "Time series anomaly detection from DTW warping path statistics"
)]
struct Cli {
    /// Run every batch on the current thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model file from labeled-normal training series.
    Train(TrainArgs),
    /// Score series against a model, one JSON line per series.
    Detect(DetectArgs),
    /// Confusion matrix, F1 and accuracy on a labeled dataset.
    Eval(EvalArgs),
    /// Write a seeded synthetic dataset.
    Synth(SynthArgs),
    /// Replay a labeled stream with a simulated expert answering uncertain items.
    HitlSim(HitlArgs),
    /// Run the HTTP review service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = warpwatch::training::DEFAULT_WINDOW)]
    window: usize,
    #[arg(long, default_value_t = Aggregator::Min)]
    aggregator: Aggregator,
    #[arg(long, default_value_t = ThresholdMode::MinSuppOverCount)]
    threshold_mode: ThresholdMode,
    /// Fixed score threshold instead of the lowest training score.
    #[arg(long)]
    score_threshold: Option<f64>,
    /// CSV of expert-chosen representatives; the row id names the group.
    #[arg(long)]
    representative: Option<PathBuf>,
    /// CSV of `series_id,group` rows; one model is trained per group.
    #[arg(long)]
    partition: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Include per-step flags, the warping path and the matched pattern.
    #[arg(long)]
    explain: bool,
    /// Uncertainty band `low,high`; omitted means two-class output.
    #[arg(long, value_parser = parse_band)]
    band: Option<(f64, f64)>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Add the plain DTW distance baseline.
    #[arg(long)]
    baseline: bool,
    /// Re-evaluate for windows `start:end:step` (inclusive).
    #[arg(long, value_parser = parse_sweep)]
    sweep_window: Option<(usize, usize, usize)>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON generator settings; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct HitlArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = parse_band, default_value = "0.25,0.30")]
    band: (f64, f64),
    /// Where to write the model after the simulated feedback.
    #[arg(long)]
    out_model: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    /// Model to load at start-up; replaces any model in the data directory.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, env = "WARPWATCH_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "WARPWATCH_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long, value_parser = parse_band)]
    band: Option<(f64, f64)>,
    /// Seconds before a pending review item expires.
    #[arg(long)]
    ttl_secs: Option<f64>,
}

fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let (low, high) = s.split_once(',').ok_or("expected low,high")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(low)?, parse(high)?))
}

fn parse_sweep(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err("expected start:end:step".into());
    };
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
    if a == 0 || step == 0 || a > b {
        return Err("need 1 <= start <= end and step >= 1".into());
    }
    Ok((a, b, step))
}

/// Exit codes: 1 general failure, 2 unreadable input, 3 training failure.
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    pub fn general(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 1,
            error: error.into(),
        }
    }
}

pub trait Classify<T> {
    fn input(self, what: impl std::fmt::Display) -> Result<T, Failure>;
    fn training(self) -> Result<T, Failure>;
    fn general(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self, what: impl std::fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 2,
            error: e.into().context(what.to_string()),
        })
    }

    fn training(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 3,
            error: e.into().context("training failed"),
        })
    }

    fn general(self) -> Result<T, Failure> {
        self.map_err(Failure::general)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve(_)) {
        "info"
    } else {
        "warn"
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default_level)),
        )
        .init();

    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let result = match cli.command {
        Command::Train(a) => commands::train(a, exec),
        Command::Detect(a) => commands::detect(a, exec),
        Command::Eval(a) => commands::eval(a, exec),
        Command::Synth(a) => commands::synth(a),
        Command::HitlSim(a) => commands::hitl(a, exec),
        Command::Serve(a) => commands::serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

//! `trackline` command line: run the tracker on cue files, score results,
//! generate simulated sequences, train the reinstatement classifier and
//! measure throughput.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use trackline::Error;

#[derive(Parser, Debug)]
#[command(name = "trackline", version, about = "Online multi-object tracking and MOT evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Track detections from a MOTChallenge file, or replay a simulated cue directory.
    #[command(group(ArgGroup::new("input").required(true).args(["det", "replay"])))]
    Track(TrackArgs),
    /// Score predicted tracks against ground truth.
    Eval(EvalArgs),
    /// Generate a simulated sequence.
    Simulate(SimulateArgs),
    /// Train the reinstatement classifier on simulated sequences.
    TrainReinstater(TrainArgs),
    /// Solver throughput against the number of people in view.
    Bench(BenchArgs),
}

#[derive(clap::Args, Debug)]
pub struct TrackArgs {
    /// Detections, MOTChallenge CSV.
    #[arg(long)]
    pub det: Option<PathBuf>,
    /// Embeddings, one row per detection row; enables reinstatement.
    #[arg(long, requires = "det")]
    pub emb: Option<PathBuf>,
    /// Cue directory written by `simulate --out-cues`.
    #[arg(long, conflicts_with_all = ["det", "seqinfo"])]
    pub replay: Option<PathBuf>,
    /// Tracker config; defaults to $TRACKLINE_CONFIG, then built-in values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Frame rate and length of the sequence.
    #[arg(long)]
    pub seqinfo: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct EvalArgs {
    /// Predicted tracks; repeat together with --gt to score several sequences.
    #[arg(long, required = true)]
    pub pred: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub gt: Vec<PathBuf>,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    /// Print JSON instead of `key=value` lines.
    #[arg(long)]
    pub json: bool,
    /// Sequences scored in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(clap::Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_gt: Option<PathBuf>,
    #[arg(long)]
    pub out_cues: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Online,
    Offline,
}

#[derive(clap::Args, Debug)]
pub struct TrainArgs {
    /// Scenario the training sequences are drawn from.
    #[arg(long, default_value = "crowded-occlusion")]
    pub scenario_set: String,
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub train_worlds: u64,
    #[arg(long, default_value_t = 2)]
    pub heldout_worlds: u64,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4, 8, 16, 32, 64])]
    pub tracks: Vec<usize>,
    #[arg(long, default_value_t = 300)]
    pub frames: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Failures carry the exit code they map to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::ModelFormat(_) | Error::Diverged(_) | Error::EmptySet(_) => 3,
            Error::SequenceMismatch { .. } => 4,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Track(a) => commands::track(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::TrainReinstater(a) => commands::train_reinstater(&a),
        Command::Bench(a) => commands::bench(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod evaluate;
mod failure;
mod files;
mod fuse_check;
mod quality;
mod summarize;
mod synth;

use failure::exit_code;

#[derive(Parser)]
#[command(
    name = "context-forge",
    version,
    about = "Action-context summaries and interaction-anticipation metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn frame records into one action context per prediction frame.
    Summarize(SummarizeArgs),
    /// Top-5 mAP of predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Score action contexts against ground-truth interactions.
    Quality(QualityArgs),
    /// Run the fusion-kernel invariant suite.
    FuseCheck(FuseCheckArgs),
    /// Emit a seeded synthetic scenario as frame records.
    Synth(SynthArgs),
}

#[derive(Args)]
pub struct SummarizeArgs {
    /// Frame records, one JSON object per line.
    #[arg(long)]
    frames: PathBuf,
    /// `key = value` configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    preds: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Variants to report (n, nv, nt, all, no, vo); all when omitted.
    #[arg(long = "variant")]
    variants: Vec<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct QualityArgs {
    /// Context records as written by `summarize`.
    #[arg(long)]
    contexts: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Word vectors, one `word v1 … v300` per line.
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct FuseCheckArgs {
    /// Parameter container to check; random parameters from `--seed` otherwise.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Save the checked parameters here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    videos: usize,
    /// Sampled frames per video.
    #[arg(long, default_value_t = 100)]
    n_frames: usize,
    #[arg(long, default_value_t = 4)]
    n_terms: usize,
    #[arg(long, default_value_t = 0.0)]
    drop_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    spurious_rate: f64,
    /// Mark every n-th sampled frame for prediction (0 = none).
    #[arg(long, default_value_t = 10)]
    predict_every: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the planted segments here.
    #[arg(long)]
    planted: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CONTEXT_FORGE_LOG", "warn"))
        .format_timestamp(None)
        .init();

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
    let result = match cli.command {
        Command::Summarize(a) => summarize::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Quality(a) => quality::run(a),
        Command::FuseCheck(a) => fuse_check::run(a),
        Command::Synth(a) => synth::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

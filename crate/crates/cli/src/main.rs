mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use elex_core::corpus::CorpusSource;
use elex_core::features::Aggregation;

#[derive(Debug, Parser)]
#[command(name = "elex", version, about = "Emotion lexicon expansion and stance-corpus preprocessing")]
struct Cli {
    /// Worker threads; never changes any output byte.
    #[arg(long, global = true, env = "ELEX_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit PCA + Gaussian mixture on lexicon embeddings and write the cluster model.
    Cluster(ClusterArgs),
    /// Per-emotion histogram of pairwise lexicon similarities (CSV).
    Histogram(HistogramArgs),
    /// Expand the lexicon at a single threshold.
    Expand(ExpandArgs),
    /// Expansion diagnostics over a threshold grid (CSV).
    Sweep(SweepArgs),
    /// Lexicon emotion features for every record of a unified corpus (JSONL).
    Features(FeaturesArgs),
    /// Stance corpus conversion and statistics.
    #[command(subcommand)]
    Corpus(CorpusCommand),
}

#[derive(Debug, Args, Serialize)]
pub struct LexiconInput {
    /// NRC TSV, or JSONL when the extension is .jsonl.
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Keep words that carry no emotion.
    #[arg(long)]
    pub keep_zero_entries: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub lexicon: LexiconInput,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub reg: f64,
    /// EM restarts; the best final log-likelihood is kept.
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub pca_dim: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct HistogramArgs {
    #[command(flatten)]
    pub lexicon: LexiconInput,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    /// Count each word against itself as well.
    #[arg(long)]
    pub include_self: bool,
    /// Where to write the coverage report (default: <out>.coverage.json).
    #[arg(long)]
    pub coverage: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExpansionInputs {
    #[command(flatten)]
    pub lexicon: LexiconInput,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Cluster model written by `elex cluster`.
    #[arg(long)]
    pub model: PathBuf,
    /// Candidate words, one per line.
    #[arg(long)]
    pub candidates: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub inputs: ExpansionInputs,
    #[arg(long, default_value_t = elex_core::expand::DEFAULT_THETA)]
    pub theta: f64,
    /// Expanded entries (JSONL with provenance).
    #[arg(long)]
    pub out: PathBuf,
    /// Expansion report JSON (default: <out>.report.json).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write seed + expansion as one JSONL lexicon.
    #[arg(long)]
    pub merged: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub inputs: ExpansionInputs,
    #[arg(long, default_value_t = 0.05)]
    pub theta_min: f64,
    #[arg(long, default_value_t = 0.95)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub theta_step: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub lexicon: LexiconInput,
    /// Unified corpus JSONL.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "fraction")]
    pub mode: Aggregation,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum CorpusCommand {
    /// Flattened source JSONL -> unified JSONL.
    Convert(ConvertArgs),
    /// Unified JSONL -> statistics JSON.
    Stats(StatsArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ConvertArgs {
    #[arg(long)]
    pub source: CorpusSource,
    /// Repeat to concatenate several inputs (e.g. both microtext parts).
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Input is already unified; labels and sources are read as-is.
    #[arg(long)]
    pub unified: bool,
    #[arg(long)]
    pub id_field: Option<String>,
    #[arg(long)]
    pub topic_field: Option<String>,
    #[arg(long)]
    pub text_field: Option<String>,
    #[arg(long)]
    pub label_field: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(commands::EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(commands::EXIT_USAGE);
        }
    }

    let result = match &cli.command {
        Command::Cluster(a) => commands::cluster(a),
        Command::Histogram(a) => commands::histogram(a),
        Command::Expand(a) => commands::expand(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Features(a) => commands::features(a),
        Command::Corpus(CorpusCommand::Convert(a)) => commands::corpus_convert(a),
        Command::Corpus(CorpusCommand::Stats(a)) => commands::corpus_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

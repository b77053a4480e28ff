mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use aoci::ablation::AblationVariant;
use aoci::metrics::{TokenEstimator, ESTIMATOR_ENV};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "aoci",
    version,
    about = "Parse, validate, generate, maintain and score code index files"
)]
struct Cli {
    /// Token estimator used for budgets, stats and reports.
    #[arg(long, global = true, env = ESTIMATOR_ENV, default_value = "chars4", value_parser = parse_estimator)]
    estimator: TokenEstimator,

    #[command(subcommand)]
    command: Command,
}

fn parse_estimator(raw: &str) -> Result<TokenEstimator, String> {
    raw.parse()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate an index; exit 1 when an error is found.
    Check(CheckArgs),
    /// Print the canonical form of an index.
    Fmt(FmtArgs),
    /// Draft an index for a repository from a rules file.
    Scaffold(ScaffoldArgs),
    /// Apply a change listing to an index in place.
    Update(UpdateArgs),
    /// Remove tag or semantic elements from an index.
    Ablate(AblateArgs),
    /// Summarize an index.
    Stats(StatsArgs),
    /// Score a predicted answer against the ground truth.
    Score(ScoreArgs),
    /// Explain a tag using an index's dictionary.
    DecodeTag(DecodeTagArgs),
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Index file, or `-` for stdin.
    index: String,
    /// Repository file list, one path per line, for coverage checks.
    #[arg(long)]
    files: Option<String>,
    /// Stop at the first parse error and treat warnings as failures.
    #[arg(long)]
    strict: bool,
    /// Glob limiting which listed files must be indexed (repeatable).
    #[arg(long)]
    include: Vec<String>,
    /// Glob excluding listed files from coverage (repeatable).
    #[arg(long)]
    exclude: Vec<String>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Debug, Args)]
struct FmtArgs {
    index: String,
    /// Exit 1 if the file is not already canonical; print nothing.
    #[arg(long, conflicts_with = "write")]
    verify: bool,
    /// Rewrite the file in place instead of printing.
    #[arg(long)]
    write: bool,
}

#[derive(Debug, Args)]
struct ScaffoldArgs {
    root: PathBuf,
    #[arg(long)]
    rules: String,
    /// Output index; stdout when omitted.
    #[arg(long, default_value = io::STDIO)]
    out: String,
    /// Directory receiving one completion prompt per entry.
    #[arg(long)]
    prompts: Option<PathBuf>,
    #[arg(long)]
    include: Vec<String>,
    #[arg(long)]
    exclude: Vec<String>,
}

#[derive(Debug, Args)]
struct UpdateArgs {
    index: PathBuf,
    /// Change listing (`M path`, `R87 old new`, ...), or `-` for stdin.
    #[arg(long, required_unless_present = "detect", conflicts_with = "detect")]
    changes: Option<String>,
    /// Directory of files holding regenerated entry lines.
    #[arg(long)]
    drafts: Option<PathBuf>,
    /// Derive the changes from file digests instead of a listing.
    #[arg(long, requires = "store")]
    detect: bool,
    /// Staleness store, read and rewritten.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Repository root for `--detect`; defaults to the index's directory.
    #[arg(long)]
    root: Option<PathBuf>,
    #[arg(long)]
    include: Vec<String>,
    #[arg(long)]
    exclude: Vec<String>,
}

#[derive(Debug, Args)]
struct AblateArgs {
    index: String,
    #[arg(long, value_parser = parse_variant)]
    variant: AblationVariant,
    /// Also strip table tags (wo-ABCDE only).
    #[arg(long)]
    tables: bool,
    /// Print the token report instead of the ablated index.
    #[arg(long)]
    report: bool,
}

fn parse_variant(raw: &str) -> Result<AblationVariant, String> {
    raw.parse()
}

#[derive(Debug, Args)]
struct StatsArgs {
    index: String,
    /// Repository line count, for the tokens-per-line ratio.
    #[arg(long)]
    loc: Option<u64>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(value_enum)]
    kind: ScoreKind,
    #[arg(long)]
    pred: String,
    #[arg(long)]
    truth: String,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScoreKind {
    /// File localization: 1 when the paths match after normalization.
    Where,
    /// Entity F1 over one entity per line.
    What,
}

#[derive(Debug, Args)]
struct DecodeTagArgs {
    tag: String,
    /// Index whose header supplies the dictionary.
    #[arg(long)]
    index: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(status) => status.into(),
        Err(err) => {
            eprintln!("aoci: {err}");
            err.exit_code()
        }
    }
}

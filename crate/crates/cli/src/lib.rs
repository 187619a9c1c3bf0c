//! `profilerank` command-line front end and HTTP service.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod service;

use config::{TextArgs, TuningArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit code 1.
    Usage(String),
    /// Input files missing or malformed; exit code 2.
    Data(profilerank_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Data(e) => e.fmt(f),
        }
    }
}

impl From<profilerank_core::Error> for CliError {
    fn from(e: profilerank_core::Error) -> Self {
        match e {
            profilerank_core::Error::InvalidConfig(m) => CliError::Usage(m),
            other => CliError::Data(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "profilerank", version, about = "Personalized re-ranking of entity search results from user profiles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize a documents file into a searchable index.
    Index {
        /// Documents JSONL (doc_id, title, summary, comments).
        #[arg(long)]
        docs: PathBuf,
        /// Index JSON to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        text: TextArgs,
    },
    /// Estimate a background model from a documents file.
    Background {
        /// Documents JSONL (doc_id, title, summary, comments).
        #[arg(long)]
        docs: PathBuf,
        /// Background JSON to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        text: TextArgs,
    },
    /// Re-rank candidate pools for users and write a run file.
    Rerank {
        #[command(flatten)]
        inputs: commands::InputArgs,
        /// Rank only the (user, query) pairs judged in this qrels file;
        /// otherwise every profile is paired with every pool.
        #[arg(long)]
        qrels: Option<PathBuf>,
        /// Run file to write; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run tag in the last column [default: derived from the config].
        #[arg(long)]
        tag: Option<String>,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Evaluate a run file against graded judgments on condensed lists.
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        /// Comma-separated metrics.
        #[arg(long, default_value = "ndcg@20,ndcg@5,p@1")]
        metrics: String,
        /// JSON report with per-topic values and averages.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paired one-sided t-test of run A against run B (H1: A is better).
    Compare {
        #[arg(long)]
        run_a: PathBuf,
        #[arg(long)]
        run_b: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long, default_value = "ndcg@20")]
        metric: String,
    },
    /// Draw a fixed-size judging sample from every pool.
    Sample {
        #[arg(long)]
        pools: PathBuf,
        /// Documents to draw per pool.
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Pools JSONL with `sampled_ids` filled in.
        #[arg(long)]
        out: PathBuf,
        /// TOML config file (only `seed` is read).
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
    },
    /// Profile ablation (full, no_book_fields, demographics_hobbies_only) on
    /// one ranker.
    Ablate {
        #[command(flatten)]
        inputs: commands::InputArgs,
        #[arg(long)]
        qrels: PathBuf,
        /// JSON report to write.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Full results table: every ranker under every variant, with
    /// significance tests against the query-only runs.
    Experiment {
        #[command(flatten)]
        inputs: commands::InputArgs,
        #[arg(long)]
        qrels: PathBuf,
        /// Rankers to compare [default: lm, bm25, plus lm-wv with --embeddings].
        #[arg(long, value_delimiter = ',')]
        rankers: Vec<profilerank_core::RankerKind>,
        /// Variants to compare.
        #[arg(long, value_delimiter = ',', default_value = "query_only,full,full_plus_entities")]
        variants: Vec<profilerank_core::RunVariant>,
        #[arg(long, default_value = "ndcg@20,ndcg@5,p@1")]
        metrics: String,
        /// Directory for one run file per cell.
        #[arg(long)]
        runs_dir: Option<PathBuf>,
        /// JSON report to write.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Serve the JSON API (and optionally a static web UI).
    Serve {
        #[command(flatten)]
        inputs: commands::InputArgs,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory of static files served outside /api.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Write the seeded synthetic collection used by the test suite.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                let _ = e.print();
                return 1;
            }
            let text = e.to_string();
            let line = text
                .lines()
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("tip:"))
                .collect::<Vec<_>>()
                .join(" ");
            let line = if line.is_empty() { "invalid arguments".to_string() } else { line };
            eprintln!("profilerank: {}", line.trim_start_matches("error: "));
            return 1;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let _ = std::io::stdout().flush();
            eprintln!("profilerank: {e}");
            e.exit_code()
        }
    }
}

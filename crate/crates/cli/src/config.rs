//! Run configuration: command-line flags override the TOML config file,
//! which overrides the built-in defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use profilerank_core::profiles::ProfileVariant;
use profilerank_core::{Mu, RankerConfig, RankerKind, RunVariant, TextConfig};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 42;

/// Keys accepted in the `--config` TOML file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub ranker: Option<RankerKind>,
    pub variant: Option<RunVariant>,
    pub lambda: Option<f64>,
    pub mu: Option<Mu>,
    pub k1: Option<f64>,
    pub b: Option<f64>,
    pub threshold: Option<f64>,
    pub bm25_multiplicity: Option<bool>,
    pub stopwords: Option<bool>,
    pub include_comments: Option<bool>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(profilerank_core::Error::io(path, e)))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))
    }

    fn load_opt(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct TuningArgs {
    /// TOML file with default settings; flags given here take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Scorer: lm, lm-wv or bm25 [default: lm].
    #[arg(long)]
    pub ranker: Option<RankerKind>,
    /// Profile view: query_only, full, full_plus_entities, no_book_fields
    /// or demographics_hobbies_only [default: full].
    #[arg(long)]
    pub variant: Option<RunVariant>,
    /// Query weight of the LM mixture in [0, 1]; query_only runs use 1
    /// [default: 0].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Dirichlet prior, a number or `auto` for the pool's mean document
    /// length [default: auto].
    #[arg(long)]
    pub mu: Option<Mu>,
    /// BM25 k1 [default: 1.5].
    #[arg(long)]
    pub k1: Option<f64>,
    /// BM25 b [default: 0.75].
    #[arg(long)]
    pub b: Option<f64>,
    /// Embedding similarity threshold T [default: 0.5].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Weight BM25 query terms by their multiplicity instead of once each.
    #[arg(long)]
    pub bm25_multiplicity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub ranker: RankerConfig,
    pub variant: RunVariant,
}

impl TuningArgs {
    pub fn file(&self) -> Result<ConfigFile, CliError> {
        ConfigFile::load_opt(self.config.as_deref())
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = self.file()?;
        self.resolve_with(&file, None)
    }

    /// Merges flags over `file`; `kind` forces the ranker.
    pub fn resolve_with(&self, file: &ConfigFile, kind: Option<RankerKind>) -> Result<RunConfig, CliError> {
        let kind = kind.or(self.ranker).or(file.ranker).unwrap_or(RankerKind::Lm);
        let mut r = RankerConfig::new(kind);
        if let Some(v) = self.lambda.or(file.lambda) {
            r.lambda = v;
        }
        if let Some(v) = self.mu.or(file.mu) {
            r.mu = v;
        }
        if let Some(v) = self.k1.or(file.k1) {
            r.k1 = v;
        }
        if let Some(v) = self.b.or(file.b) {
            r.b = v;
        }
        if let Some(v) = self.threshold.or(file.threshold) {
            r.similarity_threshold = v;
        }
        r.bm25_multiplicity = self.bm25_multiplicity || file.bm25_multiplicity.unwrap_or(false);
        r.validate()?;
        let variant = self
            .variant
            .or(file.variant)
            .unwrap_or(RunVariant::Profile(ProfileVariant::Full));
        Ok(RunConfig { ranker: r, variant })
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct TextArgs {
    /// TOML file with default settings; flags given here take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Keep stopwords instead of removing them.
    #[arg(long)]
    pub keep_stopwords: bool,
    /// Leave user comments out of document text.
    #[arg(long)]
    pub no_comments: bool,
}

impl TextArgs {
    pub fn resolve(&self) -> Result<TextConfig, CliError> {
        let file = ConfigFile::load_opt(self.config.as_deref())?;
        Ok(TextConfig {
            remove_stopwords: !self.keep_stopwords && file.stopwords.unwrap_or(true),
            include_comments: !self.no_comments && file.include_comments.unwrap_or(true),
        })
    }
}

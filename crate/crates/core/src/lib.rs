//! Personalized re-ranking of entity search results from sparse,
//! user-editable questionnaire profiles.
//!
//! The crate covers text processing and language models ([`text`]), the
//! document collection ([`corpus`]), profiles and their ablation variants
//! ([`profiles`]), word-embedding similarity ([`embeddings`]), the three
//! scorers and the pool re-ranker ([`rankers`]), and condensed-list
//! evaluation ([`eval`]).

pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod io;
pub mod profiles;
pub mod rankers;
pub mod rng;
pub mod run;
pub mod synthetic;
pub mod text;

pub use corpus::{CandidatePool, Corpus, CorpusStats, EntityDocument};
pub use embeddings::{EmbeddingTable, SimilarityConfig};
pub use error::{Error, Result};
pub use eval::{ExperimentReport, JudgmentSet, Metric};
pub use profiles::{ProfileField, ProfileVariant, TermSource, UserProfile};
pub use rankers::{Engine, Mu, RankerConfig, RankerKind, RunVariant};
pub use rng::XorShift64Star;
pub use run::{RunEntry, RunList};
pub use text::{BackgroundLM, TermSeq, TextConfig, UnigramLM};

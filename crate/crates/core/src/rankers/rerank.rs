use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::bm25::bm25_contributions;
use super::lm::{lm_addends, DocModel, ModelSide, Translation};
use super::{RankerConfig, RankerKind, RunVariant};
use crate::corpus::{CandidatePool, Corpus, EntityDocument};
use crate::embeddings::{EmbeddingTable, SimilarityConfig};
use crate::error::{Error, Result};
use crate::profiles::{profile_segments, TermSource, UserProfile};
use crate::run::{RunEntry, RunList};
use crate::text::{build_lm, tokenize, BackgroundLM, TermSeq, UnigramLM};

/// Read-only inputs shared by every scoring call.
#[derive(Debug, Clone)]
pub struct Engine {
    pub corpus: Corpus,
    pub background: BackgroundLM,
    pub embeddings: Option<EmbeddingTable>,
}

impl Engine {
    pub fn new(corpus: Corpus, background: BackgroundLM) -> Self {
        Self {
            corpus,
            background,
            embeddings: None,
        }
    }

    /// Uses the corpus itself as the background collection.
    pub fn with_corpus_background(corpus: Corpus) -> Result<Self> {
        let background = crate::text::build_background(corpus.token_streams())?;
        Ok(Self::new(corpus, background))
    }

    pub fn with_embeddings(mut self, table: EmbeddingTable) -> Self {
        self.embeddings = Some(table);
        self
    }

    fn remove_stopwords(&self) -> bool {
        self.corpus.text_config().remove_stopwords
    }
}

/// One raw addend of a document's score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermContribution {
    pub term: String,
    pub source: TermSource,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainedRun {
    pub run: RunList,
    /// Aligned with `run.entries`.
    pub explanations: Vec<Vec<TermContribution>>,
}

/// Tokenized profile with each term attributed to the first segment that
/// contains it.
struct ProfileTerms {
    terms: TermSeq,
    sources: HashMap<String, TermSource>,
}

fn profile_terms(profile: &UserProfile, variant: crate::profiles::ProfileVariant, stop: bool) -> ProfileTerms {
    let mut terms = Vec::new();
    let mut sources = HashMap::new();
    for seg in profile_segments(profile, variant) {
        for t in tokenize(&seg.text, stop).into_vec() {
            sources.entry(t.clone()).or_insert_with(|| seg.source.clone());
            terms.push(t);
        }
    }
    ProfileTerms {
        terms: TermSeq::new(terms),
        sources,
    }
}

enum Prepared<'a> {
    Lm {
        q_lm: Option<UnigramLM>,
        u_lm: Option<UnigramLM>,
        lambda: f64,
        mu: f64,
        translation: Option<Translation<'a>>,
        sources: HashMap<String, TermSource>,
    },
    Bm25 {
        query: TermSeq,
        sources: HashMap<String, TermSource>,
    },
}

fn resolve<'a>(corpus: &'a Corpus, pool: &CandidatePool) -> Result<Vec<&'a EntityDocument>> {
    pool.doc_ids
        .iter()
        .map(|id| corpus.get(id).ok_or_else(|| Error::UnknownDocument(id.clone())))
        .collect()
}

fn prepare<'a>(
    engine: &'a Engine,
    docs: &[&EntityDocument],
    query_text: &str,
    profile: Option<&UserProfile>,
    ranker: &RankerConfig,
    variant: RunVariant,
) -> Result<Prepared<'a>> {
    ranker.validate()?;
    let stop = engine.remove_stopwords();
    let profile_view = match variant.profile_variant() {
        None => None,
        Some(v) => Some(profile_terms(profile.ok_or(Error::MissingProfile)?, v, stop)),
    };
    match ranker.kind {
        RankerKind::Lm | RankerKind::LmWv => {
            let lambda = ranker.effective_lambda(variant);
            let q_lm = if lambda > 0.0 {
                Some(build_lm(&tokenize(query_text, stop))?)
            } else {
                None
            };
            let (u_lm, sources) = match profile_view {
                Some(view) if lambda < 1.0 => (Some(build_lm(&view.terms)?), view.sources),
                Some(view) => (None, view.sources),
                None => (None, HashMap::new()),
            };
            let mu = match ranker.mu {
                super::Mu::Fixed(m) => m,
                super::Mu::Auto if docs.is_empty() => 0.0,
                super::Mu::Auto => {
                    docs.iter().map(|d| f64::from(d.length)).sum::<f64>() / docs.len() as f64
                }
            };
            let translation = if ranker.kind == RankerKind::LmWv {
                Some(Translation {
                    table: engine.embeddings.as_ref().ok_or(Error::MissingEmbeddings)?,
                    config: SimilarityConfig::new(ranker.similarity_threshold)?,
                })
            } else {
                None
            };
            Ok(Prepared::Lm {
                q_lm,
                u_lm,
                lambda,
                mu,
                translation,
                sources,
            })
        }
        RankerKind::Bm25 => Ok(match profile_view {
            None => Prepared::Bm25 {
                query: tokenize(query_text, stop),
                sources: HashMap::new(),
            },
            Some(view) => Prepared::Bm25 {
                query: view.terms,
                sources: view.sources,
            },
        }),
    }
}

impl Prepared<'_> {
    fn ascending(&self) -> bool {
        matches!(self, Prepared::Lm { .. })
    }

    fn score(
        &self,
        engine: &Engine,
        doc: &EntityDocument,
        ranker: &RankerConfig,
    ) -> Result<(f64, Vec<TermContribution>)> {
        let source_of = |sources: &HashMap<String, TermSource>, t: &str| {
            sources.get(t).cloned().unwrap_or(TermSource::Query)
        };
        match self {
            Prepared::Lm {
                q_lm,
                u_lm,
                lambda,
                mu,
                translation,
                sources,
            } => {
                let model = DocModel::new(doc, *translation);
                let addends = lm_addends(
                    q_lm.as_ref(),
                    u_lm.as_ref(),
                    &model,
                    &engine.background,
                    *lambda,
                    *mu,
                )?;
                let score = addends.iter().map(|a| a.value).sum();
                let parts = addends
                    .into_iter()
                    .map(|a| TermContribution {
                        source: match a.side {
                            ModelSide::Query => TermSource::Query,
                            ModelSide::User => source_of(sources, &a.term),
                        },
                        term: a.term,
                        contribution: a.value,
                    })
                    .collect();
                Ok((score, parts))
            }
            Prepared::Bm25 { query, sources } => {
                let contributions =
                    bm25_contributions(query, doc, engine.corpus.stats(), &ranker.bm25());
                let score = contributions.iter().map(|(_, c)| c).sum();
                let parts = contributions
                    .into_iter()
                    .filter(|(_, c)| *c != 0.0)
                    .map(|(term, contribution)| TermContribution {
                        source: source_of(sources, &term),
                        term,
                        contribution,
                    })
                    .collect();
                Ok((score, parts))
            }
        }
    }
}

/// Scores every pool document and sorts by the scorer's polarity (ascending
/// divergence for the LM rankers, descending BM25), ties by doc id.
pub fn rerank_explained(
    engine: &Engine,
    pool: &CandidatePool,
    user_id: &str,
    profile: Option<&UserProfile>,
    ranker: &RankerConfig,
    variant: RunVariant,
) -> Result<ExplainedRun> {
    let docs = resolve(&engine.corpus, pool)?;
    let prepared = prepare(engine, &docs, &pool.query_text, profile, ranker, variant)?;
    let mut scored: Vec<(&EntityDocument, f64, Vec<TermContribution>)> = docs
        .iter()
        .map(|d| prepared.score(engine, d, ranker).map(|(s, parts)| (*d, s, parts)))
        .collect::<Result<_>>()?;
    let ascending = prepared.ascending();
    scored.sort_by(|a, b| {
        let by_score = if ascending {
            a.1.total_cmp(&b.1)
        } else {
            b.1.total_cmp(&a.1)
        };
        by_score.then_with(|| a.0.doc_id.cmp(&b.0.doc_id))
    });
    let mut run = RunList::new(user_id, &pool.query_id);
    let mut explanations = Vec::with_capacity(scored.len());
    for (i, (doc, score, parts)) in scored.into_iter().enumerate() {
        run.entries.push(RunEntry {
            doc_id: doc.doc_id.clone(),
            score,
            rank: i + 1,
        });
        explanations.push(parts);
    }
    Ok(ExplainedRun { run, explanations })
}

pub fn rerank(
    engine: &Engine,
    pool: &CandidatePool,
    user_id: &str,
    profile: Option<&UserProfile>,
    ranker: &RankerConfig,
    variant: RunVariant,
) -> Result<RunList> {
    rerank_explained(engine, pool, user_id, profile, ranker, variant).map(|e| e.run)
}

//! Entity documents, corpus statistics and candidate pools.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::rng::XorShift64Star;
use crate::text::{tokenize, TermSeq, TextConfig};

/// One searchable entity page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityDocument {
    pub doc_id: String,
    pub title: String,
    pub summary: String,
    pub comments: Vec<String>,
    pub term_counts: BTreeMap<String, u32>,
    /// Token count `|d|`; always the sum of `term_counts`.
    pub length: u32,
}

impl EntityDocument {
    pub fn new(
        doc_id: impl Into<String>,
        title: impl Into<String>,
        summary: impl Into<String>,
        comments: Vec<String>,
        config: &TextConfig,
    ) -> Self {
        let mut doc = Self {
            doc_id: doc_id.into(),
            title: title.into(),
            summary: summary.into(),
            comments,
            term_counts: BTreeMap::new(),
            length: 0,
        };
        let terms = doc.terms(config);
        doc.length = terms.len() as u32;
        doc.term_counts = terms.counts();
        doc
    }

    /// Title, summary and (optionally) comments, space-joined.
    pub fn text(&self, include_comments: bool) -> String {
        let mut parts = vec![self.title.as_str(), self.summary.as_str()];
        if include_comments {
            parts.extend(self.comments.iter().map(String::as_str));
        }
        parts.join(" ")
    }

    pub fn terms(&self, config: &TextConfig) -> TermSeq {
        tokenize(&self.text(config.include_comments), config.remove_stopwords)
    }

    pub fn count(&self, term: &str) -> u32 {
        self.term_counts.get(term).copied().unwrap_or(0)
    }

    /// The document vocabulary `V_d` in term order.
    pub fn vocab(&self) -> impl Iterator<Item = (&str, u32)> {
        self.term_counts.iter().map(|(t, c)| (t.as_str(), *c))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub num_docs: usize,
    pub total_tokens: u64,
    pub avg_doc_len: f64,
    pub doc_freq: BTreeMap<String, u32>,
}

impl CorpusStats {
    pub fn compute<'a>(docs: impl IntoIterator<Item = &'a EntityDocument>) -> Self {
        let mut stats = CorpusStats::default();
        for d in docs {
            stats.num_docs += 1;
            stats.total_tokens += u64::from(d.length);
            for t in d.term_counts.keys() {
                *stats.doc_freq.entry(t.clone()).or_insert(0) += 1;
            }
        }
        if stats.num_docs > 0 {
            stats.avg_doc_len = stats.total_tokens as f64 / stats.num_docs as f64;
        }
        stats
    }

    pub fn df(&self, term: &str) -> u32 {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }
}

/// Documents plus their statistics; immutable once built.
#[derive(Debug, Clone)]
pub struct Corpus {
    text_config: TextConfig,
    docs: Vec<EntityDocument>,
    by_id: HashMap<String, usize>,
    stats: CorpusStats,
}

#[derive(Deserialize)]
struct DocumentRecord {
    doc_id: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    summary: String,
    #[serde(default)]
    comments: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    text_config: TextConfig,
    stats: CorpusStats,
    documents: Vec<EntityDocument>,
}

impl Corpus {
    pub fn from_documents(docs: Vec<EntityDocument>, text_config: TextConfig) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if by_id.insert(d.doc_id.clone(), i).is_some() {
                return Err(Error::DuplicateDocument(d.doc_id.clone()));
            }
        }
        let stats = CorpusStats::compute(&docs);
        Ok(Self {
            text_config,
            docs,
            by_id,
            stats,
        })
    }

    pub fn text_config(&self) -> &TextConfig {
        &self.text_config
    }

    pub fn docs(&self) -> &[EntityDocument] {
        &self.docs
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn get(&self, doc_id: &str) -> Option<&EntityDocument> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Token streams of every document, for background estimation.
    pub fn token_streams(&self) -> impl Iterator<Item = TermSeq> + '_ {
        self.docs.iter().map(|d| d.terms(&self.text_config))
    }

    pub fn to_index_json(&self) -> Result<String> {
        let file = IndexFile {
            text_config: self.text_config,
            stats: self.stats.clone(),
            documents: self.docs.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn save_index(&self, path: &Path) -> Result<()> {
        io::write_file(path, self.to_index_json()?.as_bytes())
    }

    /// Loads an index written by [`Corpus::save_index`]. Statistics are
    /// recomputed from the stored term counts.
    pub fn load_index(path: &Path) -> Result<Self> {
        let text = io::read_to_string(path)?;
        let file: IndexFile =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e))?;
        for d in &file.documents {
            let sum: u32 = d.term_counts.values().sum();
            if sum != d.length {
                return Err(Error::InvalidInput(format!(
                    "index document `{}` has length {} but term counts sum to {sum}",
                    d.doc_id, d.length
                )));
            }
        }
        Self::from_documents(file.documents, file.text_config)
    }
}

/// Reads the documents file: one JSON object per line with `doc_id`,
/// `title`, `summary` and `comments`.
pub fn load_documents(path: &Path, config: &TextConfig) -> Result<Corpus> {
    let records: Vec<(usize, DocumentRecord)> = io::read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut docs = Vec::with_capacity(records.len());
    for (line, r) in records {
        if r.doc_id.is_empty() {
            return Err(Error::parse(path, line, "empty doc_id"));
        }
        if !seen.insert(r.doc_id.clone()) {
            return Err(Error::DuplicateDocument(r.doc_id));
        }
        docs.push(EntityDocument::new(
            r.doc_id, r.title, r.summary, r.comments, config,
        ));
    }
    Corpus::from_documents(docs, *config)
}

/// Documents-file serialization (the raw fields only).
pub fn documents_to_jsonl(docs: &[EntityDocument]) -> Result<String> {
    io::to_jsonl(docs.iter().map(|d| DocumentRecordOut {
        doc_id: &d.doc_id,
        title: &d.title,
        summary: &d.summary,
        comments: &d.comments,
    }))
}

#[derive(Serialize)]
struct DocumentRecordOut<'a> {
    doc_id: &'a str,
    title: &'a str,
    summary: &'a str,
    comments: &'a [String],
}

/// The non-personalized result pool `M` for one query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub query_id: String,
    pub query_text: String,
    pub doc_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled_ids: Option<Vec<String>>,
}

impl CandidatePool {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for id in &self.doc_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "pool `{}` lists doc `{id}` twice",
                    self.query_id
                )));
            }
        }
        if let Some(sampled) = &self.sampled_ids {
            let mut sampled_seen = HashSet::new();
            for id in sampled {
                if !seen.contains(id.as_str()) {
                    return Err(Error::InvalidInput(format!(
                        "pool `{}` samples doc `{id}` which is not in the pool",
                        self.query_id
                    )));
                }
                if !sampled_seen.insert(id.as_str()) {
                    return Err(Error::InvalidInput(format!(
                        "pool `{}` samples doc `{id}` twice",
                        self.query_id
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn load_pools(path: &Path) -> Result<Vec<CandidatePool>> {
    let records: Vec<(usize, CandidatePool)> = io::read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut pools = Vec::with_capacity(records.len());
    for (line, pool) in records {
        pool.validate()
            .map_err(|e| Error::parse(path, line, e))?;
        if !seen.insert(pool.query_id.clone()) {
            return Err(Error::DuplicateQuery(pool.query_id));
        }
        pools.push(pool);
    }
    Ok(pools)
}

pub fn pools_to_jsonl(pools: &[CandidatePool]) -> Result<String> {
    io::to_jsonl(pools)
}

/// Draws `n` documents without replacement.
///
/// A Fisher-Yates prefix shuffle over the pool positions, driven by
/// [`XorShift64Star`] seeded with `seed`: for `i` in `0..n`, swap position
/// `i` with `i + below(len - i)`. The first `n` positions are the sample,
/// reported in original pool order.
pub fn sample_pool(pool: &CandidatePool, n: usize, seed: u64) -> Result<CandidatePool> {
    let len = pool.doc_ids.len();
    if n > len {
        return Err(Error::SampleTooLarge {
            requested: n,
            available: len,
        });
    }
    let mut rng = XorShift64Star::new(seed);
    let mut positions: Vec<usize> = (0..len).collect();
    for i in 0..n {
        let j = i + rng.below((len - i) as u64) as usize;
        positions.swap(i, j);
    }
    let mut chosen = positions[..n].to_vec();
    chosen.sort_unstable();
    Ok(CandidatePool {
        sampled_ids: Some(chosen.into_iter().map(|i| pool.doc_ids[i].clone()).collect()),
        ..pool.clone()
    })
}

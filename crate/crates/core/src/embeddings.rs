//! Word-embedding table, thresholded cosine similarity and the translation
//! probabilities `p(w|u)` derived from it.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    /// Cosines below this value count as zero.
    pub threshold: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self { threshold: 0.5 }
    }
}

impl SimilarityConfig {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidConfig(format!(
                "similarity threshold {threshold} outside [-1, 1]"
            )));
        }
        Ok(Self { threshold })
    }
}

#[derive(Debug, Clone)]
struct Entry {
    vector: Vec<f32>,
    norm: f64,
}

#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Entry>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.vectors.contains_key(term)
    }

    pub fn vector(&self, term: &str) -> Option<&[f32]> {
        self.vectors.get(term).map(|e| e.vector.as_slice())
    }

    /// Adds a vector unless the term is already present. Zero vectors are
    /// not stored. Returns whether the vector was inserted.
    pub fn insert(&mut self, term: &str, vector: Vec<f32>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "vector for `{term}` has {} values, expected {}",
                vector.len(),
                self.dim
            )));
        }
        let term = term.to_lowercase();
        if self.vectors.contains_key(&term) {
            return Ok(false);
        }
        let norm = vector
            .iter()
            .map(|v| f64::from(*v) * f64::from(*v))
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Ok(false);
        }
        self.vectors.insert(term, Entry { vector, norm });
        Ok(true)
    }

    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let (ea, eb) = (self.vectors.get(a)?, self.vectors.get(b)?);
        let dot: f64 = ea
            .vector
            .iter()
            .zip(&eb.vector)
            .map(|(x, y)| f64::from(*x) * f64::from(*y))
            .sum();
        Some(dot / (ea.norm * eb.norm))
    }

    /// Parses word2vec text format. The optional `"<count> <dim>"` header
    /// fixes the dimension; otherwise the first vector line does.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        for (n, line) in io::numbered_lines(text) {
            let mut parts = line.split_whitespace();
            let term = parts.next().expect("non-blank line has a token");
            let rest: Vec<&str> = parts.collect();
            if table.is_none() && rest.len() == 1 {
                if let (Ok(_), Ok(dim)) = (term.parse::<usize>(), rest[0].parse::<usize>()) {
                    if dim == 0 {
                        return Err(Error::parse(path, n, "header declares dimension 0"));
                    }
                    table = Some(EmbeddingTable::new(dim));
                    continue;
                }
            }
            let table = table.get_or_insert_with(|| EmbeddingTable::new(rest.len()));
            if rest.len() != table.dim {
                return Err(Error::parse(
                    path,
                    n,
                    format!("expected {} values, found {}", table.dim, rest.len()),
                ));
            }
            let vector = rest
                .iter()
                .map(|v| v.parse::<f32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(path, n, format!("bad vector value: {e}")))?;
            table.insert(term, vector)?;
        }
        Ok(table.unwrap_or_default())
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    EmbeddingTable::parse(&io::read_to_string(path)?, path)
}

/// Thresholded similarity: 1 for identical terms (even when absent from the
/// table), the cosine when both vectors exist and it reaches the threshold,
/// and 0 otherwise. Negative cosines never survive.
pub fn sim(w1: &str, w2: &str, table: &EmbeddingTable, config: &SimilarityConfig) -> f64 {
    if w1 == w2 {
        return 1.0;
    }
    match table.cosine(w1, w2) {
        Some(c) if c >= config.threshold => c.max(0.0),
        _ => 0.0,
    }
}

/// `p(w|u) = sim(w, u) / sum_{u' in V_d} sim(u', u)`.
pub fn translation_prob<'a, I>(
    w: &str,
    u: &str,
    doc_vocab: I,
    table: &EmbeddingTable,
    config: &SimilarityConfig,
) -> Result<f64>
where
    I: IntoIterator<Item = &'a str> + Clone,
{
    if !doc_vocab.clone().into_iter().any(|t| t == u) {
        return Err(Error::TermNotInDocument(u.to_string()));
    }
    let denom: f64 = doc_vocab
        .into_iter()
        .map(|v| sim(v, u, table, config))
        .sum();
    Ok(sim(w, u, table, config) / denom)
}

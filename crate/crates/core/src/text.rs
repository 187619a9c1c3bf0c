//! Tokenization and unigram language models.
//!
//! Every other module goes through [`tokenize`] so that queries, profiles and
//! documents share one vocabulary. Models are kept in `BTreeMap`s: iteration
//! order is fixed, which keeps floating-point sums (and therefore score files)
//! reproducible across runs.

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STOPWORDS_TXT: &str = include_str!("../resources/stopwords.txt");

/// The embedded English stopword list, one term per line.
pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_TXT
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

pub fn is_stopword(term: &str) -> bool {
    stopwords().contains(term)
}

/// Text-processing switches shared by documents, queries and profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextConfig {
    pub remove_stopwords: bool,
    /// Whether document comments count towards document term statistics.
    pub include_comments: bool,
}

impl Default for TextConfig {
    fn default() -> Self {
        Self {
            remove_stopwords: true,
            include_comments: true,
        }
    }
}

/// An ordered sequence of lowercase alphanumeric tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermSeq(Vec<String>);

impl TermSeq {
    pub fn new(terms: Vec<String>) -> Self {
        Self(terms)
    }

    pub fn terms(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<String> {
        self.0
    }

    /// Term counts, in term order.
    pub fn counts(&self) -> BTreeMap<String, u32> {
        let mut counts = BTreeMap::new();
        for t in &self.0 {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
        counts
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl FromIterator<String> for TermSeq {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl AsRef<[String]> for TermSeq {
    fn as_ref(&self) -> &[String] {
        &self.0
    }
}

impl<'a> IntoIterator for &'a TermSeq {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Lowercases `text` and splits it on every non-alphanumeric character.
///
/// Lowercasing happens before splitting, so characters whose lowercase form
/// contains combining marks still split cleanly.
pub fn tokenize(text: &str, remove_stopwords: bool) -> TermSeq {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| !(remove_stopwords && is_stopword(t)))
        .map(str::to_owned)
        .collect()
}

/// A maximum-likelihood unigram model: `p(w) = count(w) / |terms|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnigramLM {
    probs: BTreeMap<String, f64>,
    total_terms: usize,
}

impl UnigramLM {
    pub fn prob(&self, term: &str) -> f64 {
        self.probs.get(term).copied().unwrap_or(0.0)
    }

    pub fn probs(&self) -> &BTreeMap<String, f64> {
        &self.probs
    }

    pub fn total_terms(&self) -> usize {
        self.total_terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probs.iter().map(|(t, p)| (t.as_str(), *p))
    }

    pub fn vocab_len(&self) -> usize {
        self.probs.len()
    }
}

pub fn build_lm(terms: &TermSeq) -> Result<UnigramLM> {
    if terms.is_empty() {
        return Err(Error::EmptyText);
    }
    let total = terms.len();
    let probs = terms
        .counts()
        .into_iter()
        .map(|(t, c)| (t, f64::from(c) / total as f64))
        .collect();
    Ok(UnigramLM {
        probs,
        total_terms: total,
    })
}

/// Laplace-smoothed collection model with explicit out-of-vocabulary mass.
///
/// `p(w) = (count(w) + 1) / (T + V + 1)` for seen terms and
/// `1 / (T + V + 1)` for any unseen term, where `T` is the token count and
/// `V` the number of distinct terms.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundLM {
    counts: BTreeMap<String, u64>,
    probs: BTreeMap<String, f64>,
    total_tokens: u64,
    oov_prob: f64,
}

impl BackgroundLM {
    pub fn from_counts(counts: BTreeMap<String, u64>) -> Result<Self> {
        let counts: BTreeMap<String, u64> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        let total_tokens: u64 = counts.values().sum();
        if total_tokens == 0 {
            return Err(Error::EmptyBackground);
        }
        let denom = (total_tokens + counts.len() as u64 + 1) as f64;
        let probs = counts
            .iter()
            .map(|(t, c)| (t.clone(), (*c + 1) as f64 / denom))
            .collect();
        Ok(Self {
            counts,
            probs,
            total_tokens,
            oov_prob: 1.0 / denom,
        })
    }

    /// A collection model given directly as probabilities, e.g. published
    /// term statistics of a large web crawl. Every value must lie in (0, 1].
    pub fn from_probabilities(probs: BTreeMap<String, f64>, oov_prob: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyBackground);
        }
        let valid = |p: f64| p > 0.0 && p <= 1.0;
        if let Some((t, p)) = probs.iter().find(|(_, p)| !valid(**p)) {
            return Err(Error::InvalidInput(format!(
                "background probability of `{t}` is {p}, outside (0, 1]"
            )));
        }
        if !valid(oov_prob) {
            return Err(Error::InvalidInput(format!(
                "out-of-vocabulary probability {oov_prob} outside (0, 1]"
            )));
        }
        Ok(Self {
            counts: BTreeMap::new(),
            probs,
            total_tokens: 0,
            oov_prob,
        })
    }

    pub fn prob(&self, term: &str) -> f64 {
        self.probs.get(term).copied().unwrap_or(self.oov_prob)
    }

    pub fn oov_prob(&self) -> f64 {
        self.oov_prob
    }

    pub fn vocab_size(&self) -> usize {
        self.probs.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn probs(&self) -> &BTreeMap<String, f64> {
        &self.probs
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }
}

pub fn build_background<I, S>(stream: I) -> Result<BackgroundLM>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[String]>,
{
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for seq in stream {
        for t in seq.as_ref() {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    BackgroundLM::from_counts(counts)
}

// Count-based models are serialized as raw counts and their probabilities
// recomputed on load, so a round trip through JSON is exact.
#[derive(Serialize, Deserialize)]
struct BackgroundRepr {
    total_tokens: u64,
    vocab_size: usize,
    counts: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probs: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    oov_prob: Option<f64>,
}

impl Serialize for BackgroundLM {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let given = self.counts.is_empty();
        BackgroundRepr {
            total_tokens: self.total_tokens,
            vocab_size: self.probs.len(),
            counts: self.counts.clone(),
            probs: given.then(|| self.probs.clone()),
            oov_prob: given.then_some(self.oov_prob),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BackgroundLM {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = BackgroundRepr::deserialize(d)?;
        let built = match (repr.probs, repr.oov_prob) {
            (Some(probs), Some(oov)) if repr.counts.is_empty() => {
                BackgroundLM::from_probabilities(probs, oov)
            }
            (None, None) => BackgroundLM::from_counts(repr.counts),
            _ => Err(Error::InvalidInput(
                "background needs either counts or probs with oov_prob".into(),
            )),
        };
        built.map_err(serde::de::Error::custom)
    }
}

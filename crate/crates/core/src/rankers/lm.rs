//! Mixture KL-divergence language-model scoring.
//!
//! A document is scored by
//!
//! ```text
//! lambda * KL(theta_q || theta_d) + (1 - lambda) * KL(theta_u || theta_d)
//! ```
//!
//! against its Dirichlet-smoothed model
//! `p(w|d) = (m(w,d) + mu * p(w|C)) / (|d| + mu)`. Without translation
//! `m(w,d)` is the raw count; with translation it is
//! `sum_{u in V_d} p(w|u) * count(u,d)`, which collapses to the raw count when
//! the translation model is the identity. Lower scores rank higher.

use serde::{Deserialize, Serialize};

use crate::corpus::EntityDocument;
use crate::embeddings::{sim, EmbeddingTable, SimilarityConfig};
use crate::error::{Error, Result};
use crate::text::{BackgroundLM, UnigramLM};

#[derive(Debug, Clone, Copy)]
pub struct Translation<'a> {
    pub table: &'a EmbeddingTable,
    pub config: SimilarityConfig,
}

/// A document prepared for repeated smoothed-probability lookups.
pub struct DocModel<'a> {
    doc: &'a EntityDocument,
    translation: Option<(Translation<'a>, Vec<(&'a str, f64, f64)>)>,
}

impl<'a> DocModel<'a> {
    pub fn new(doc: &'a EntityDocument, translation: Option<Translation<'a>>) -> Self {
        let translation = translation.map(|tr| {
            // (u, count(u,d), sum_{u' in V_d} sim(u', u))
            let vocab: Vec<(&str, f64, f64)> = doc
                .vocab()
                .map(|(u, c)| {
                    let z: f64 = doc
                        .vocab()
                        .map(|(v, _)| sim(v, u, tr.table, &tr.config))
                        .sum();
                    (u, f64::from(c), z)
                })
                .collect();
            (tr, vocab)
        });
        Self { doc, translation }
    }

    pub fn doc(&self) -> &EntityDocument {
        self.doc
    }

    /// `m(w,d)`: raw count, or translated count mass.
    pub fn mass(&self, w: &str) -> f64 {
        match &self.translation {
            None => f64::from(self.doc.count(w)),
            Some((tr, vocab)) => {
                if !tr.table.contains(w) {
                    // Only the identity pair can be non-zero.
                    return vocab
                        .iter()
                        .find(|(u, _, _)| *u == w)
                        .map(|(_, c, z)| 1.0 / z * c)
                        .unwrap_or(0.0);
                }
                vocab
                    .iter()
                    .map(|(u, c, z)| sim(w, u, tr.table, &tr.config) / z * c)
                    .sum()
            }
        }
    }

    pub fn smoothed_prob(&self, w: &str, bg: &BackgroundLM, mu: f64) -> Result<f64> {
        let mass = self.mass(w);
        if mu == 0.0 && mass == 0.0 {
            return Err(Error::ZeroProbability(w.to_string()));
        }
        Ok((mass + mu * bg.prob(w)) / (f64::from(self.doc.length) + mu))
    }
}

pub fn smoothed_doc_prob(
    w: &str,
    doc: &EntityDocument,
    bg: &BackgroundLM,
    mu: f64,
    translation: Option<Translation<'_>>,
) -> Result<f64> {
    check_mu(mu)?;
    DocModel::new(doc, translation).smoothed_prob(w, bg, mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSide {
    Query,
    User,
}

/// One weighted divergence term: `weight * p(w|theta) * ln(p(w|theta) / p(w|d))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmAddend {
    pub term: String,
    pub side: ModelSide,
    pub value: f64,
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidConfig(format!("mu must be >= 0, got {mu}")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidConfig(format!("lambda {lambda} outside [0, 1]")));
    }
    Ok(())
}

fn push_side(
    out: &mut Vec<LmAddend>,
    lm: &UnigramLM,
    weight: f64,
    side: ModelSide,
    model: &DocModel<'_>,
    bg: &BackgroundLM,
    mu: f64,
) -> Result<()> {
    for (w, p) in lm.iter() {
        let pd = model.smoothed_prob(w, bg, mu)?;
        out.push(LmAddend {
            term: w.to_string(),
            side,
            value: weight * p * (p / pd).ln(),
        });
    }
    Ok(())
}

/// Per-term addends of the mixture divergence; their sum (in order) is the
/// score. A side with zero weight is skipped entirely.
pub fn lm_addends(
    q_lm: Option<&UnigramLM>,
    u_lm: Option<&UnigramLM>,
    model: &DocModel<'_>,
    bg: &BackgroundLM,
    lambda: f64,
    mu: f64,
) -> Result<Vec<LmAddend>> {
    check_lambda(lambda)?;
    check_mu(mu)?;
    let mut out = Vec::new();
    if lambda > 0.0 {
        let q = q_lm.ok_or(Error::EmptyText)?;
        push_side(&mut out, q, lambda, ModelSide::Query, model, bg, mu)?;
    }
    if lambda < 1.0 {
        let u = u_lm.ok_or(Error::MissingUserModel)?;
        push_side(&mut out, u, 1.0 - lambda, ModelSide::User, model, bg, mu)?;
    }
    Ok(out)
}

pub fn sum_addends(addends: &[LmAddend]) -> f64 {
    addends.iter().map(|a| a.value).sum()
}

/// Mixture KL divergence of `doc` (natural log; lower is better).
pub fn lm_score(
    q_lm: &UnigramLM,
    u_lm: Option<&UnigramLM>,
    doc: &EntityDocument,
    bg: &BackgroundLM,
    lambda: f64,
    mu: f64,
    translation: Option<Translation<'_>>,
) -> Result<f64> {
    let model = DocModel::new(doc, translation);
    lm_addends(Some(q_lm), u_lm, &model, bg, lambda, mu).map(|a| sum_addends(&a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{build_lm, TermSeq, TextConfig};

    fn seq(s: &str) -> TermSeq {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn doc(text: &str) -> EntityDocument {
        let cfg = TextConfig {
            remove_stopwords: false,
            include_comments: true,
        };
        EntityDocument::new("d", "", text, vec![], &cfg)
    }

    fn half_half() -> BackgroundLM {
        let probs = [("a".to_string(), 0.5), ("b".to_string(), 0.5)].into();
        BackgroundLM::from_probabilities(probs, 0.01).unwrap()
    }

    #[test]
    fn smoothed_examples() {
        let bg = half_half();
        let d = doc("a a b");
        let p = smoothed_doc_prob("a", &d, &bg, 1.0, None).unwrap();
        assert!((p - 0.625).abs() < 1e-12);
        assert_eq!(smoothed_doc_prob("a", &d, &bg, 0.0, None).unwrap(), 2.0 / 3.0);
        let far = smoothed_doc_prob("a", &d, &bg, 1e12, None).unwrap();
        assert!((far - bg.prob("a")).abs() < 1e-6);
        assert!(matches!(
            smoothed_doc_prob("z", &d, &bg, 0.0, None),
            Err(Error::ZeroProbability(_))
        ));
        assert!(smoothed_doc_prob("a", &d, &bg, -1.0, None).is_err());
    }

    #[test]
    fn score_examples() {
        let bg = half_half();
        let d = doc("a a b");
        let q = build_lm(&seq("a")).unwrap();
        let u = build_lm(&seq("b")).unwrap();
        let s1 = lm_score(&q, None, &d, &bg, 1.0, 1.0, None).unwrap();
        assert!((s1 - 0.4700).abs() < 1e-4, "{s1}");
        let s2 = lm_score(&q, Some(&u), &d, &bg, 0.5, 1.0, None).unwrap();
        assert!((s2 - 0.7254).abs() < 1e-4, "{s2}");
        let other = build_lm(&seq("a b b")).unwrap();
        let s3 = lm_score(&q, Some(&other), &d, &bg, 1.0, 1.0, None).unwrap();
        assert_eq!(s1.to_bits(), s3.to_bits());
        assert!(matches!(
            lm_score(&q, None, &d, &bg, 0.5, 1.0, None),
            Err(Error::MissingUserModel)
        ));
        assert!(lm_score(&q, None, &d, &bg, 1.5, 1.0, None).is_err());
    }

    #[test]
    fn translation_spreads_mass() {
        let bg = half_half();
        let d = doc("cat cat mat");
        let mut table = EmbeddingTable::new(2);
        table.insert("cat", vec![1.0, 0.0]).unwrap();
        table.insert("kitten", vec![0.9, 0.1]).unwrap();
        table.insert("mat", vec![0.0, 1.0]).unwrap();
        let tr = Translation {
            table: &table,
            config: SimilarityConfig::default(),
        };
        let plain = smoothed_doc_prob("kitten", &d, &bg, 1.0, None).unwrap();
        let translated = smoothed_doc_prob("kitten", &d, &bg, 1.0, Some(tr)).unwrap();
        assert!(translated > plain);
        // identity pairs are untouched when no neighbour clears the threshold
        let m = DocModel::new(&d, Some(tr));
        assert_eq!(m.mass("mat"), 1.0);
        assert_eq!(m.mass("cat"), 2.0);
    }
}

//! BM25 with the profile as the query.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusStats, EntityDocument};
use crate::error::{Error, Result};
use crate::profiles::{profile_text, ProfileVariant, UserProfile};
use crate::text::{tokenize, TermSeq};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Config {
    pub k1: f64,
    pub b: f64,
    /// Weight each distinct term by its multiplicity in the effective query
    /// instead of scoring it once.
    pub weight_by_multiplicity: bool,
}

impl Default for Bm25Config {
    fn default() -> Self {
        Self {
            k1: 1.5,
            b: 0.75,
            weight_by_multiplicity: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuerySource {
    QueryOnly,
    Profile,
    ProfilePlusEntities,
}

impl QuerySource {
    pub fn profile_variant(self) -> Option<ProfileVariant> {
        match self {
            QuerySource::QueryOnly => None,
            QuerySource::Profile => Some(ProfileVariant::Full),
            QuerySource::ProfilePlusEntities => Some(ProfileVariant::FullPlusEntities),
        }
    }
}

impl fmt::Display for QuerySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuerySource::QueryOnly => "query_only",
            QuerySource::Profile => "profile",
            QuerySource::ProfilePlusEntities => "profile_plus_entities",
        })
    }
}

impl FromStr for QuerySource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "query_only" | "query" => Ok(QuerySource::QueryOnly),
            "profile" => Ok(QuerySource::Profile),
            "profile_plus_entities" => Ok(QuerySource::ProfilePlusEntities),
            _ => Err(Error::InvalidConfig(format!("unknown query source `{s}`"))),
        }
    }
}

/// `ln((N - df + 0.5) / (df + 0.5) + 1)`; never negative.
pub fn idf(num_docs: usize, df: u32) -> f64 {
    let n = num_docs as f64;
    let df = f64::from(df);
    ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
}

fn term_weight(tf: f64, doc_len: f64, avgdl: f64, cfg: &Bm25Config) -> f64 {
    if tf == 0.0 {
        return 0.0;
    }
    let norm = if avgdl > 0.0 { doc_len / avgdl } else { 1.0 };
    tf * (cfg.k1 + 1.0) / (tf + cfg.k1 * (1.0 - cfg.b + cfg.b * norm))
}

/// Contribution of each distinct query term, in term order (zeros included).
pub fn bm25_contributions(
    query: &TermSeq,
    doc: &EntityDocument,
    stats: &CorpusStats,
    cfg: &Bm25Config,
) -> Vec<(String, f64)> {
    let doc_len = f64::from(doc.length);
    query
        .counts()
        .into_iter()
        .map(|(t, qtf)| {
            let tf = f64::from(doc.count(&t));
            let mut c = idf(stats.num_docs, stats.df(&t)) * term_weight(tf, doc_len, stats.avg_doc_len, cfg);
            if cfg.weight_by_multiplicity {
                c *= f64::from(qtf);
            }
            (t, c)
        })
        .collect()
}

/// BM25 score of `doc` (higher is better).
pub fn bm25_score(
    query: &TermSeq,
    doc: &EntityDocument,
    stats: &CorpusStats,
    cfg: &Bm25Config,
) -> f64 {
    bm25_contributions(query, doc, stats, cfg)
        .iter()
        .map(|(_, c)| c)
        .sum()
}

/// The terms BM25 scores with: the query itself, or the profile text.
pub fn build_effective_query(
    query_text: &str,
    profile: Option<&UserProfile>,
    source: QuerySource,
    remove_stopwords: bool,
) -> Result<TermSeq> {
    match source.profile_variant() {
        None => Ok(tokenize(query_text, remove_stopwords)),
        Some(v) => {
            let p = profile.ok_or(Error::MissingProfile)?;
            Ok(tokenize(&profile_text(p, v), remove_stopwords))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{attach_entities, EntityDescription};
    use crate::text::TextConfig;
    use proptest::prelude::*;

    fn seq(s: &str) -> TermSeq {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn stats(n: usize, df: &[(&str, u32)], avgdl: f64) -> CorpusStats {
        CorpusStats {
            num_docs: n,
            total_tokens: (avgdl * n as f64) as u64,
            avg_doc_len: avgdl,
            doc_freq: df.iter().map(|(t, c)| (t.to_string(), *c)).collect(),
        }
    }

    fn doc(text: &str) -> EntityDocument {
        let cfg = TextConfig {
            remove_stopwords: false,
            include_comments: true,
        };
        EntityDocument::new("d", "", text, vec![], &cfg)
    }

    #[test]
    fn zero_tf_scores_zero() {
        let s = stats(10, &[("x", 2)], 3.0);
        assert_eq!(bm25_score(&seq("x y"), &doc("a b c"), &s, &Bm25Config::default()), 0.0);
    }

    #[test]
    fn single_term_contribution_is_idf() {
        let s = stats(10, &[("x", 2)], 4.0);
        let score = bm25_score(&seq("x"), &doc("x a b c"), &s, &Bm25Config::default());
        assert!((score - 4.4f64.ln()).abs() < 1e-12);
        assert!((score - 1.4816).abs() < 1e-4);
    }

    #[test]
    fn saturation() {
        let s = stats(10, &[("x", 2)], 4.0);
        let cfg = Bm25Config::default();
        let one = bm25_score(&seq("x"), &doc("x a b c"), &s, &cfg);
        let two = bm25_score(&seq("x"), &doc("x x b c"), &s, &cfg);
        assert!(two > one && two < 2.0 * one);
    }

    #[test]
    fn duplicates_collapse_unless_weighted() {
        let s = stats(10, &[("x", 2)], 4.0);
        let d = doc("x a b c");
        let cfg = Bm25Config::default();
        assert_eq!(bm25_score(&seq("x x"), &d, &s, &cfg), bm25_score(&seq("x"), &d, &s, &cfg));
        let weighted = Bm25Config {
            weight_by_multiplicity: true,
            ..cfg
        };
        assert_eq!(
            bm25_score(&seq("x x"), &d, &s, &weighted),
            2.0 * bm25_score(&seq("x"), &d, &s, &cfg)
        );
    }

    #[test]
    fn unseen_terms_use_df_zero() {
        assert!((idf(10, 0) - (10.5f64 / 0.5 + 1.0).ln()).abs() < 1e-12);
        assert!(idf(10, 10) > 0.0);
    }

    #[test]
    fn effective_query_sources() {
        assert_eq!(
            build_effective_query("time travel", None, QuerySource::QueryOnly, true).unwrap(),
            seq("time travel")
        );
        let mut p = UserProfile::new("u");
        p.hobbies = "hiking".into();
        p.favorite_books = vec!["Dune".into()];
        assert_eq!(
            build_effective_query("time travel", Some(&p), QuerySource::Profile, true).unwrap(),
            seq("hiking dune")
        );
        let p = attach_entities(
            p,
            vec![EntityDescription {
                owner_field: "favorite_books".into(),
                mention: "Dune".into(),
                entity_id: "e1".into(),
                description: "desert planet saga".into(),
            }],
        )
        .unwrap();
        let q = build_effective_query("", Some(&p), QuerySource::ProfilePlusEntities, true).unwrap();
        assert_eq!(q, seq("hiking desert planet saga"));
        assert!(matches!(
            build_effective_query("x", None, QuerySource::Profile, true),
            Err(Error::MissingProfile)
        ));
    }

    proptest! {
        #[test]
        fn permutation_invariant(mut terms in prop::collection::vec("[a-d]", 1..8), seed in any::<u64>()) {
            let s = stats(10, &[("a", 3), ("b", 1), ("c", 7)], 5.0);
            let d = doc("a b b c c c d");
            let before = bm25_score(&TermSeq::new(terms.clone()), &d, &s, &Bm25Config::default());
            let mut rng = crate::rng::XorShift64Star::new(seed);
            rng.shuffle(&mut terms);
            let after = bm25_score(&TermSeq::new(terms), &d, &s, &Bm25Config::default());
            prop_assert_eq!(before.to_bits(), after.to_bits());
        }
    }
}

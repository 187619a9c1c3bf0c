//! Scorers and the pool re-ranker.

mod bm25;
mod lm;
mod rerank;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::ProfileVariant;

pub use bm25::{bm25_contributions, bm25_score, build_effective_query, idf, Bm25Config, QuerySource};
pub use lm::{
    lm_addends, lm_score, smoothed_doc_prob, sum_addends, DocModel, LmAddend, ModelSide,
    Translation,
};
pub use rerank::{rerank, rerank_explained, Engine, ExplainedRun, TermContribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RankerKind {
    #[serde(rename = "lm")]
    Lm,
    #[serde(rename = "lm-wv")]
    LmWv,
    #[serde(rename = "bm25")]
    Bm25,
}

impl RankerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RankerKind::Lm => "lm",
            RankerKind::LmWv => "lm-wv",
            RankerKind::Bm25 => "bm25",
        }
    }
}

impl fmt::Display for RankerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RankerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "lm" => Ok(RankerKind::Lm),
            "lm-wv" | "lmwv" | "lm+wv" => Ok(RankerKind::LmWv),
            "bm25" => Ok(RankerKind::Bm25),
            _ => Err(Error::InvalidConfig(format!("unknown ranker `{s}`"))),
        }
    }
}

/// Dirichlet prior: fixed, or the mean document length of the pool.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Mu {
    #[default]
    Auto,
    Fixed(f64),
}

impl fmt::Display for Mu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mu::Auto => f.write_str("auto"),
            Mu::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Mu {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Mu::Auto);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("mu must be a number or `auto`, got `{s}`")))?;
        Ok(Mu::Fixed(v))
    }
}

impl Serialize for Mu {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Mu::Auto => s.serialize_str("auto"),
            Mu::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Mu {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Mu::Fixed(v)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// The profile view a run uses, or none at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RunVariant {
    QueryOnly,
    Profile(ProfileVariant),
}

impl RunVariant {
    pub fn profile_variant(self) -> Option<ProfileVariant> {
        match self {
            RunVariant::QueryOnly => None,
            RunVariant::Profile(v) => Some(v),
        }
    }
}

impl fmt::Display for RunVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunVariant::QueryOnly => f.write_str("query_only"),
            RunVariant::Profile(v) => v.fmt(f),
        }
    }
}

impl FromStr for RunVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "query" | "query_only" | "none" => Ok(RunVariant::QueryOnly),
            _ => s.parse().map(RunVariant::Profile),
        }
    }
}

impl Serialize for RunVariant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RunVariant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Everything needed to instantiate one of the three scorers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankerConfig {
    pub kind: RankerKind,
    /// Query-vs-user weight for the LM rankers. Query-only runs always use 1.
    pub lambda: f64,
    pub mu: Mu,
    pub k1: f64,
    pub b: f64,
    pub similarity_threshold: f64,
    pub bm25_multiplicity: bool,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self::new(RankerKind::Lm)
    }
}

impl RankerConfig {
    /// Defaults: personalized mode (`lambda = 0`), `mu = auto`, `T = 0.5`,
    /// `k1 = 1.5`, `b = 0.75`.
    pub fn new(kind: RankerKind) -> Self {
        let bm = Bm25Config::default();
        Self {
            kind,
            lambda: 0.0,
            mu: Mu::Auto,
            k1: bm.k1,
            b: bm.b,
            similarity_threshold: 0.5,
            bm25_multiplicity: bm.weight_by_multiplicity,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidConfig(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if let Mu::Fixed(m) = self.mu {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::InvalidConfig(format!("mu must be >= 0, got {m}")));
            }
        }
        if !(-1.0..=1.0).contains(&self.similarity_threshold) {
            return Err(Error::InvalidConfig(format!(
                "similarity threshold {} outside [-1, 1]",
                self.similarity_threshold
            )));
        }
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(Error::InvalidConfig(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidConfig(format!("b {} outside [0, 1]", self.b)));
        }
        Ok(())
    }

    pub fn bm25(&self) -> Bm25Config {
        Bm25Config {
            k1: self.k1,
            b: self.b,
            weight_by_multiplicity: self.bm25_multiplicity,
        }
    }

    /// The lambda actually used for `variant`.
    pub fn effective_lambda(&self, variant: RunVariant) -> f64 {
        match variant {
            RunVariant::QueryOnly => 1.0,
            RunVariant::Profile(_) => self.lambda,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing() {
        assert_eq!("lm-wv".parse::<RankerKind>().unwrap(), RankerKind::LmWv);
        assert_eq!("auto".parse::<Mu>().unwrap(), Mu::Auto);
        assert_eq!("250".parse::<Mu>().unwrap(), Mu::Fixed(250.0));
        assert_eq!("query".parse::<RunVariant>().unwrap(), RunVariant::QueryOnly);
        assert_eq!(
            "no_book_fields".parse::<RunVariant>().unwrap(),
            RunVariant::Profile(ProfileVariant::NoBookFields)
        );
        assert!("bogus".parse::<RunVariant>().is_err());
    }

    #[test]
    fn config_serde() {
        let cfg = RankerConfig::new(RankerKind::Bm25);
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"mu\":\"auto\""));
        let back: RankerConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation() {
        assert!(RankerConfig::default().validate().is_ok());
        assert!(RankerConfig::default().with_lambda(1.2).validate().is_err());
        let mut c = RankerConfig::default();
        c.mu = Mu::Fixed(-1.0);
        assert!(c.validate().is_err());
    }
}

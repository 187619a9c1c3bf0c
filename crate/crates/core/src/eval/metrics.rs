//! Condensed-list metrics.
//!
//! Gain is `2^grade - 1`, the discount at rank `i` is `log2(i + 1)`, and the
//! ideal ordering sorts the condensed list's grades in descending order.
//! Metrics return `None` when undefined (empty condensed list); undefined
//! values are left out of averages.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::qrels::JudgmentSet;
use crate::error::{Error, Result};
use crate::run::RunList;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Ndcg(usize),
    PrecisionAt1,
}

impl Metric {
    pub const DEFAULTS: [Metric; 3] = [Metric::Ndcg(20), Metric::Ndcg(5), Metric::PrecisionAt1];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Ndcg(k) => write!(f, "ndcg@{k}"),
            Metric::PrecisionAt1 => f.write_str("p@1"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "p@1" || lower == "precision@1" || lower == "p1" {
            return Ok(Metric::PrecisionAt1);
        }
        if let Some(k) = lower.strip_prefix("ndcg@") {
            if let Ok(k) = k.parse::<usize>() {
                if k > 0 {
                    return Ok(Metric::Ndcg(k));
                }
            }
        }
        Err(Error::InvalidConfig(format!(
            "unknown metric `{s}` (expected ndcg@<k> or p@1)"
        )))
    }
}

impl Serialize for Metric {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

pub fn parse_metrics(list: &str) -> Result<Vec<Metric>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Drops unjudged entries, keeps order, renumbers ranks.
pub fn condense(run: &RunList, judgments: &JudgmentSet) -> RunList {
    let judged = judgments.pair(&run.user_id, &run.query_id);
    let mut out = RunList::new(&run.user_id, &run.query_id);
    out.entries = run
        .entries
        .iter()
        .filter(|e| judged.is_some_and(|j| j.contains_key(&e.doc_id)))
        .cloned()
        .collect();
    out.renumber();
    out
}

fn grades(run: &RunList, judgments: &JudgmentSet) -> Vec<u8> {
    run.entries
        .iter()
        .filter_map(|e| judgments.grade(&run.user_id, &run.query_id, &e.doc_id))
        .collect()
}

pub fn gain(grade: u8) -> f64 {
    f64::from((1u32 << grade) - 1)
}

/// DCG@k of grades listed in rank order.
pub fn dcg(grades: &[u8], k: usize) -> f64 {
    grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| gain(*g) / ((i + 2) as f64).log2())
        .sum()
}

pub fn ndcg_of_grades(grades: &[u8], k: usize) -> Option<f64> {
    if grades.is_empty() {
        return None;
    }
    let mut ideal = grades.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(&ideal, k);
    if idcg == 0.0 {
        return Some(0.0);
    }
    Some(dcg(grades, k) / idcg)
}

pub fn ndcg_at_k(condensed: &RunList, judgments: &JudgmentSet, k: usize) -> Option<f64> {
    ndcg_of_grades(&grades(condensed, judgments), k)
}

/// 1 when the top condensed result is graded interesting or better.
pub fn precision_at_1(condensed: &RunList, judgments: &JudgmentSet) -> Option<f64> {
    grades(condensed, judgments)
        .first()
        .map(|g| if *g >= 1 { 1.0 } else { 0.0 })
}

pub fn metric_value(metric: Metric, condensed: &RunList, judgments: &JudgmentSet) -> Option<f64> {
    match metric {
        Metric::Ndcg(k) => ndcg_at_k(condensed, judgments, k),
        Metric::PrecisionAt1 => precision_at_1(condensed, judgments),
    }
}

/// Condenses `run` and computes each metric on the result.
pub fn evaluate_run(run: &RunList, judgments: &JudgmentSet, metrics: &[Metric]) -> Vec<Option<f64>> {
    let condensed = condense(run, judgments);
    metrics
        .iter()
        .map(|m| metric_value(*m, &condensed, judgments))
        .collect()
}

/// Mean of the defined values.
pub fn macro_average(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

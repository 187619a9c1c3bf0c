//! Table-style experiments: every (ranker, variant) cell re-ranks each
//! judged (user, query) pair, condenses against the judgments and averages
//! the metrics over pairs.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::metrics::{evaluate_run, macro_average, Metric};
use super::qrels::JudgmentSet;
use super::ttest::{paired_t_test, TTest};
use crate::corpus::CandidatePool;
use crate::error::{Error, Result};
use crate::profiles::{ProfileVariant, UserProfile};
use crate::rankers::{rerank, Engine, RankerConfig, RunVariant};
use crate::run::RunList;

pub struct ExperimentInputs<'a> {
    pub engine: &'a Engine,
    pub pools: &'a [CandidatePool],
    pub profiles: &'a BTreeMap<String, UserProfile>,
    pub judgments: &'a JudgmentSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub ranker: RankerConfig,
    pub variant: RunVariant,
}

impl Cell {
    pub fn new(ranker: RankerConfig, variant: RunVariant) -> Self {
        Self { ranker, variant }
    }

    /// Run-file tag, e.g. `lm-l0-full`.
    pub fn tag(&self) -> String {
        format!(
            "{}-l{}-{}",
            self.ranker.kind,
            self.ranker.effective_lambda(self.variant),
            self.variant
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairValues {
    pub user_id: String,
    pub query_id: String,
    /// Aligned with the report's metrics; `None` is undefined.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub cell: Cell,
    pub tag: String,
    pub averages: Vec<Option<f64>>,
    pub pairs: Vec<PairValues>,
    /// Pairs whose profile variant left no text to build a user model from;
    /// their values are undefined.
    pub empty_profile_pairs: usize,
    /// Runs of the pairs that could be scored, in pair order.
    #[serde(skip)]
    pub runs: Vec<RunList>,
}

impl CellReport {
    pub fn average(&self, metrics: &[Metric], metric: Metric) -> Option<f64> {
        let i = metrics.iter().position(|m| *m == metric)?;
        self.averages[i]
    }
}

/// One personalized cell tested against the query-only cell of the same
/// ranker.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Significance {
    pub tag: String,
    pub baseline_tag: String,
    pub metric: Metric,
    /// Pairs where both values are defined.
    pub n: usize,
    pub test: Option<TTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub metrics: Vec<Metric>,
    pub cells: Vec<CellReport>,
    pub significance: Vec<Significance>,
    pub evaluated_pairs: usize,
    /// Judged pairs with no pool, no profile, or no judged doc in the pool.
    pub skipped_pairs: usize,
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"))
}

impl ExperimentReport {
    pub fn cell(&self, tag: &str) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.tag == tag)
    }

    /// The metric table followed by the significance table.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("ranker\tlambda\tvariant");
        for m in &self.metrics {
            write!(out, "\t{m}").unwrap();
        }
        out.push('\n');
        for c in &self.cells {
            write!(
                out,
                "{}\t{}\t{}",
                c.cell.ranker.kind,
                c.cell.ranker.effective_lambda(c.cell.variant),
                c.cell.variant
            )
            .unwrap();
            for v in &c.averages {
                write!(out, "\t{}", fmt_value(*v)).unwrap();
            }
            out.push('\n');
        }
        if !self.significance.is_empty() {
            out.push_str("\nrun\tbaseline\tmetric\tn\tt\tp_one_sided\n");
            for s in &self.significance {
                let (t, p) = match &s.test {
                    Some(t) => (format!("{:.4}", t.t), format!("{:.4}", t.p_one_sided)),
                    None => ("NA".into(), "NA".into()),
                };
                writeln!(out, "{}\t{}\t{}\t{}\t{t}\t{p}", s.tag, s.baseline_tag, s.metric, s.n).unwrap();
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

struct Pair<'a> {
    user_id: &'a str,
    pool: &'a CandidatePool,
    profile: Option<&'a UserProfile>,
}

fn usable_pairs<'a>(inputs: &ExperimentInputs<'a>, need_profile: bool) -> (Vec<Pair<'a>>, usize) {
    let pools: HashMap<&str, &CandidatePool> =
        inputs.pools.iter().map(|p| (p.query_id.as_str(), p)).collect();
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for (user, query) in inputs.judgments.pairs() {
        let Some(pool) = pools.get(query) else {
            skipped += 1;
            continue;
        };
        let profile = inputs.profiles.get_key_value(user);
        if need_profile && profile.is_none() {
            skipped += 1;
            continue;
        }
        let judged = inputs.judgments.pair(user, query);
        if !pool
            .doc_ids
            .iter()
            .any(|d| judged.is_some_and(|j| j.contains_key(d)))
        {
            skipped += 1;
            continue;
        }
        let (user_id, profile) = match profile {
            Some((k, p)) => (k.as_str(), Some(p)),
            None => (user, None),
        };
        pairs.push(Pair { user_id, pool, profile });
    }
    (pairs, skipped)
}

/// Runs every cell on every usable judged pair.
///
/// Personalized cells get a paired one-sided t-test per metric against the
/// query-only cell of the same ranker configuration, when that cell is part
/// of the experiment.
pub fn run_experiment(
    inputs: &ExperimentInputs<'_>,
    cells: &[Cell],
    metrics: &[Metric],
) -> Result<ExperimentReport> {
    if cells.is_empty() {
        return Err(Error::InvalidConfig("experiment needs at least one cell".into()));
    }
    for c in cells {
        c.ranker.validate()?;
    }
    let need_profile = cells.iter().any(|c| c.variant != RunVariant::QueryOnly);
    let (pairs, skipped) = usable_pairs(inputs, need_profile);
    let mut reports = Vec::with_capacity(cells.len());
    for cell in cells {
        let outcomes: Vec<Option<RunList>> = pairs
            .par_iter()
            .map(|p| {
                match rerank(inputs.engine, p.pool, p.user_id, p.profile, &cell.ranker, cell.variant) {
                    Ok(run) => Ok(Some(run)),
                    Err(Error::EmptyText) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        let per_pair: Vec<PairValues> = pairs
            .par_iter()
            .zip(&outcomes)
            .map(|(p, run)| PairValues {
                user_id: p.user_id.to_string(),
                query_id: p.pool.query_id.clone(),
                values: match run {
                    Some(r) => evaluate_run(r, inputs.judgments, metrics),
                    None => vec![None; metrics.len()],
                },
            })
            .collect();
        let empty_profile_pairs = outcomes.iter().filter(|o| o.is_none()).count();
        let runs: Vec<RunList> = outcomes.into_iter().flatten().collect();
        let averages = (0..metrics.len())
            .map(|i| macro_average(per_pair.iter().map(|p| p.values[i])))
            .collect();
        reports.push(CellReport {
            cell: *cell,
            tag: cell.tag(),
            averages,
            pairs: per_pair,
            empty_profile_pairs,
            runs,
        });
    }
    let significance = significance_rows(&reports, metrics)?;
    Ok(ExperimentReport {
        metrics: metrics.to_vec(),
        cells: reports,
        significance,
        evaluated_pairs: pairs.len(),
        skipped_pairs: skipped,
    })
}

fn significance_rows(cells: &[CellReport], metrics: &[Metric]) -> Result<Vec<Significance>> {
    let mut rows = Vec::new();
    for c in cells.iter().filter(|c| c.cell.variant != RunVariant::QueryOnly) {
        let Some(base) = cells
            .iter()
            .find(|b| b.cell.variant == RunVariant::QueryOnly && b.cell.ranker == c.cell.ranker)
        else {
            continue;
        };
        for (i, metric) in metrics.iter().enumerate() {
            let (a, b): (Vec<f64>, Vec<f64>) = c
                .pairs
                .iter()
                .zip(&base.pairs)
                .filter_map(|(x, y)| Some((x.values[i]?, y.values[i]?)))
                .unzip();
            let test = if a.len() >= 2 { Some(paired_t_test(&a, &b)?) } else { None };
            rows.push(Significance {
                tag: c.tag.clone(),
                baseline_tag: base.tag.clone(),
                metric: *metric,
                n: a.len(),
                test,
            });
        }
    }
    Ok(rows)
}

/// The three-row profile ablation on one ranker.
pub fn run_ablation(
    inputs: &ExperimentInputs<'_>,
    ranker: RankerConfig,
    metrics: &[Metric],
) -> Result<ExperimentReport> {
    let cells: Vec<Cell> = [
        ProfileVariant::Full,
        ProfileVariant::NoBookFields,
        ProfileVariant::DemographicsHobbiesOnly,
    ]
    .into_iter()
    .map(|v| Cell::new(ranker, RunVariant::Profile(v)))
    .collect();
    run_experiment(inputs, &cells, metrics)
}

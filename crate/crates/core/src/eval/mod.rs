//! Judgments, condensed-list metrics, significance tests and experiments.

mod experiment;
mod metrics;
mod qrels;
mod ttest;

pub use experiment::{
    run_ablation, run_experiment, Cell, CellReport, ExperimentInputs, ExperimentReport,
    PairValues, Significance,
};
pub use metrics::{
    condense, dcg, evaluate_run, gain, macro_average, metric_value, ndcg_at_k, ndcg_of_grades,
    parse_metrics, precision_at_1, Metric,
};
pub use qrels::{load_qrels, parse_qrels, JudgmentSet};
pub use ttest::{paired_t_test, student_t_upper_tail, TTest};

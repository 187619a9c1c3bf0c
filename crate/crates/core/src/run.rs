//! Ranked run lists and the TREC run-file format.
//!
//! One line per entry: `<user_id>:<query_id> Q0 <doc_id> <rank> <score> <tag>`
//! with the score printed to six decimals. The topic column joins user and
//! query with the first `:`, so user ids must not contain a colon.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub doc_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunList {
    pub user_id: String,
    pub query_id: String,
    pub entries: Vec<RunEntry>,
}

impl RunList {
    pub fn new(user_id: impl Into<String>, query_id: impl Into<String>) -> Self {
        Self {
            user_id: user_id.into(),
            query_id: query_id.into(),
            entries: vec![],
        }
    }

    pub fn topic(&self) -> String {
        format!("{}:{}", self.user_id, self.query_id)
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Renumbers ranks 1..n in current order.
    pub fn renumber(&mut self) {
        for (i, e) in self.entries.iter_mut().enumerate() {
            e.rank = i + 1;
        }
    }
}

pub fn split_topic(topic: &str) -> Option<(&str, &str)> {
    topic.split_once(':')
}

pub fn format_run<'a>(runs: impl IntoIterator<Item = &'a RunList>, tag: &str) -> String {
    let mut out = String::new();
    for run in runs {
        let topic = run.topic();
        for e in &run.entries {
            writeln!(out, "{topic} Q0 {} {} {:.6} {tag}", e.doc_id, e.rank, e.score)
                .expect("writing to a String cannot fail");
        }
    }
    out
}

/// Parses a run file. Topics keep their first-appearance order and entries
/// are ordered by the rank column.
pub fn parse_run(text: &str, path: &Path) -> Result<Vec<RunList>> {
    let mut runs: Vec<RunList> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (n, line) in io::numbered_lines(text) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 6 {
            return Err(Error::parse(path, n, format!("expected 6 columns, found {}", cols.len())));
        }
        let (user, query) = split_topic(cols[0])
            .ok_or_else(|| Error::parse(path, n, "topic must be <user_id>:<query_id>"))?;
        let rank: usize = cols[3]
            .parse()
            .map_err(|_| Error::parse(path, n, format!("bad rank `{}`", cols[3])))?;
        let score: f64 = cols[4]
            .parse()
            .map_err(|_| Error::parse(path, n, format!("bad score `{}`", cols[4])))?;
        let i = *index.entry(cols[0].to_string()).or_insert_with(|| {
            runs.push(RunList::new(user, query));
            runs.len() - 1
        });
        if runs[i].entries.iter().any(|e| e.doc_id == cols[2]) {
            return Err(Error::parse(path, n, format!("doc `{}` repeated in topic", cols[2])));
        }
        runs[i].entries.push(RunEntry {
            doc_id: cols[2].to_string(),
            score,
            rank,
        });
    }
    for run in &mut runs {
        run.entries
            .sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.doc_id.cmp(&b.doc_id)));
    }
    Ok(runs)
}

pub fn load_run(path: &Path) -> Result<Vec<RunList>> {
    parse_run(&io::read_to_string(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_and_parse() {
        let run = RunList {
            user_id: "u1".into(),
            query_id: "q7".into(),
            entries: vec![
                RunEntry { doc_id: "d2".into(), score: 0.25, rank: 1 },
                RunEntry { doc_id: "d1".into(), score: 1.0 / 3.0, rank: 2 },
            ],
        };
        let text = format_run([&run], "lm");
        assert_eq!(text, "u1:q7 Q0 d2 1 0.250000 lm\nu1:q7 Q0 d1 2 0.333333 lm\n");
        let back = parse_run(&text, Path::new("run")).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].doc_ids().collect::<Vec<_>>(), vec!["d2", "d1"]);
    }

    #[test]
    fn parse_orders_by_rank() {
        let text = "u:q Q0 b 2 1.0 x\nu:q Q0 a 1 2.0 x\n";
        let runs = parse_run(text, Path::new("run")).unwrap();
        assert_eq!(runs[0].doc_ids().collect::<Vec<_>>(), vec!["a", "b"]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_run("uq Q0 a 1 2.0 x\n", Path::new("r")),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_run("u:q Q0 a 1 2.0\n", Path::new("r")),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_run("u:q Q0 a 1 2.0 x\nu:q Q0 a 2 1.0 x\n", Path::new("r")),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}

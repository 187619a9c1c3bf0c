use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io;
use crate::run::split_topic;

/// Graded judgments (0, 1 or 2) keyed by (user, query, doc). "Don't know"
/// answers are simply absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JudgmentSet {
    by_pair: BTreeMap<(String, String), BTreeMap<String, u8>>,
}

impl JudgmentSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, user: &str, query: &str, doc: &str, grade: u8) -> Result<()> {
        if grade > 2 {
            return Err(Error::InvalidInput(format!("grade {grade} not in {{0, 1, 2}}")));
        }
        self.by_pair
            .entry((user.to_string(), query.to_string()))
            .or_default()
            .insert(doc.to_string(), grade);
        Ok(())
    }

    pub fn grade(&self, user: &str, query: &str, doc: &str) -> Option<u8> {
        self.by_pair
            .get(&(user.to_string(), query.to_string()))?
            .get(doc)
            .copied()
    }

    /// Judged documents of one pair, by doc id.
    pub fn pair(&self, user: &str, query: &str) -> Option<&BTreeMap<String, u8>> {
        self.by_pair.get(&(user.to_string(), query.to_string()))
    }

    /// Every judged (user, query) pair in sorted order.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.by_pair.keys().map(|(u, q)| (u.as_str(), q.as_str()))
    }

    pub fn len(&self) -> usize {
        self.by_pair.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Qrels text: `<user_id>:<query_id> 0 <doc_id> <grade>` per line.
    pub fn to_qrels(&self) -> String {
        let mut out = String::new();
        for ((u, q), docs) in &self.by_pair {
            for (d, g) in docs {
                writeln!(out, "{u}:{q} 0 {d} {g}").expect("writing to a String cannot fail");
            }
        }
        out
    }
}

pub fn parse_qrels(text: &str, path: &Path) -> Result<JudgmentSet> {
    let mut set = JudgmentSet::new();
    for (n, line) in io::numbered_lines(text) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(Error::parse(path, n, format!("expected 4 columns, found {}", cols.len())));
        }
        let (user, query) = split_topic(cols[0])
            .ok_or_else(|| Error::parse(path, n, "topic must be <user_id>:<query_id>"))?;
        let grade: u8 = match cols[3] {
            "0" => 0,
            "1" => 1,
            "2" => 2,
            g => return Err(Error::parse(path, n, format!("grade `{g}` not in {{0, 1, 2}}"))),
        };
        if set.grade(user, query, cols[2]).is_some() {
            return Err(Error::parse(path, n, format!("doc `{}` judged twice", cols[2])));
        }
        set.insert(user, query, cols[2], grade)?;
    }
    Ok(set)
}

pub fn load_qrels(path: &Path) -> Result<JudgmentSet> {
    parse_qrels(&io::read_to_string(path)?, path)
}

//! Turns per-question scores into 0/1 labels.
//!
//! The top-ranked candidate gets label 1 unless the runner-up is within a
//! threshold of it, in which case the runner-up is labeled 1 instead. For
//! similarities the replacement fires when `|best - second| <= epsilon`; for
//! distances when `second - best < delta`. Exact score ties are broken by the
//! smaller candidate id.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{Metric, SimilarityRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    Similarity,
    Distance,
}

impl LabelMode {
    pub fn for_metric(metric: Metric) -> Self {
        if metric.is_distance() {
            LabelMode::Distance
        } else {
            LabelMode::Similarity
        }
    }
}

pub const DEFAULT_EPSILON: f64 = 0.0005;
pub const DEFAULT_DELTA: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelingRule {
    pub mode: LabelMode,
    pub replacement_enabled: bool,
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for LabelingRule {
    fn default() -> Self {
        LabelingRule::similarity()
    }
}

impl LabelingRule {
    pub fn similarity() -> Self {
        LabelingRule {
            mode: LabelMode::Similarity,
            replacement_enabled: true,
            epsilon: DEFAULT_EPSILON,
            delta: DEFAULT_DELTA,
        }
    }

    pub fn distance() -> Self {
        LabelingRule {
            mode: LabelMode::Distance,
            ..LabelingRule::similarity()
        }
    }

    pub fn without_replacement(self) -> Self {
        LabelingRule {
            replacement_enabled: false,
            ..self
        }
    }

    /// The threshold that applies in this rule's mode.
    pub fn threshold(&self) -> f64 {
        match self.mode {
            LabelMode::Similarity => self.epsilon,
            LabelMode::Distance => self.delta,
        }
    }

    pub fn with_threshold(self, value: f64) -> Self {
        match self.mode {
            LabelMode::Similarity => LabelingRule {
                epsilon: value,
                ..self
            },
            LabelMode::Distance => LabelingRule {
                delta: value,
                ..self
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.delta >= 0.0) {
            return Err(Error::InvalidArgument(
                "epsilon and delta must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Candidate indices ordered best first; ties by candidate id.
fn ranking(scores: &[SimilarityRecord], better: impl Fn(f64, f64) -> Ordering) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        better(scores[a].combined, scores[b].combined)
            .then_with(|| scores[a].candidate_id.cmp(&scores[b].candidate_id))
    });
    order
}

fn one_hot(len: usize, winner: usize) -> Vec<u8> {
    let mut labels = vec![0; len];
    labels[winner] = 1;
    labels
}

/// Labels one question's candidates by combined similarity (higher is
/// better). Labels come back in the order of `scores`.
pub fn label_by_similarity(scores: &[SimilarityRecord], rule: &LabelingRule) -> Vec<u8> {
    if scores.is_empty() {
        return Vec::new();
    }
    let order = ranking(scores, |a, b| b.total_cmp(&a));
    let best = order[0];
    let winner = match order.get(1) {
        Some(&second)
            if rule.replacement_enabled
                && (scores[best].combined - scores[second].combined).abs() <= rule.epsilon =>
        {
            second
        }
        _ => best,
    };
    one_hot(scores.len(), winner)
}

/// Labels one question's candidates by combined distance (lower is better).
pub fn label_by_distance(scores: &[SimilarityRecord], rule: &LabelingRule) -> Vec<u8> {
    if scores.is_empty() {
        return Vec::new();
    }
    let order = ranking(scores, |a, b| a.total_cmp(&b));
    let best = order[0];
    let winner = match order.get(1) {
        Some(&second)
            if rule.replacement_enabled
                && scores[second].combined - scores[best].combined < rule.delta =>
        {
            second
        }
        _ => best,
    };
    one_hot(scores.len(), winner)
}

pub fn label_group(scores: &[SimilarityRecord], rule: &LabelingRule) -> Vec<u8> {
    match rule.mode {
        LabelMode::Similarity => label_by_similarity(scores, rule),
        LabelMode::Distance => label_by_distance(scores, rule),
    }
}

/// Labels keyed by question id, then candidate id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub labels: BTreeMap<String, BTreeMap<String, u8>>,
}

impl PredictionSet {
    pub fn insert(&mut self, question_id: &str, candidate_id: &str, label: u8) {
        self.labels
            .entry(question_id.to_owned())
            .or_default()
            .insert(candidate_id.to_owned(), label);
    }

    pub fn len(&self) -> usize {
        self.labels.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(question_id, candidate_id, label)` in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u8)> {
        self.labels.iter().flat_map(|(q, cands)| {
            cands
                .iter()
                .map(move |(c, &l)| (q.as_str(), c.as_str(), l))
        })
    }

    pub fn get(&self, candidate_id: &str) -> Option<u8> {
        self.labels
            .values()
            .find_map(|cands| cands.get(candidate_id).copied())
    }

    /// Questions that do not have exactly one positive label.
    pub fn questions_without_single_positive(&self) -> Vec<&str> {
        self.labels
            .iter()
            .filter(|(_, c)| c.values().filter(|&&l| l == 1).count() != 1)
            .map(|(q, _)| q.as_str())
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::io(path, e);
        let mut writer = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
        writer
            .write_record(["question_id", "candidate_id", "label"])
            .map_err(|e| io(e.into()))?;
        for (q, c, l) in self.iter() {
            writer
                .write_record([q, c, &l.to_string()])
                .map_err(|e| io(e.into()))?;
        }
        writer.flush().map_err(io)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| parse_err(0, e.to_string()))?;
        let mut set = PredictionSet::default();
        for row in reader.records() {
            let row = row.map_err(|e| {
                parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string())
            })?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            if row.len() != 3 {
                return Err(parse_err(line, format!("expected 3 fields, found {}", row.len())));
            }
            let label = match row[2].trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(parse_err(line, format!("bad label `{other}`"))),
            };
            set.insert(&row[0], &row[1], label);
        }
        Ok(set)
    }
}

/// Applies `rule` to every group of scores.
pub fn predict(groups: &[Vec<SimilarityRecord>], rule: &LabelingRule) -> PredictionSet {
    let mut set = PredictionSet::default();
    for group in groups {
        for (record, label) in group.iter().zip(label_group(group, rule)) {
            set.insert(&record.question_id, &record.candidate_id, label);
        }
    }
    set
}

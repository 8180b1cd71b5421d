//! Candidate-level accuracy and macro-F1, the Q/S by right/wrong breakdown,
//! and threshold grid search.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{predict, LabelingRule, PredictionSet};
use crate::scoring::{SimilarityRecord, Source};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Keyed by class label, `"0"` and `"1"`.
    pub per_class: BTreeMap<String, ClassMetrics>,
    pub n: usize,
}

impl EvalReport {
    pub fn class(&self, label: u8) -> ClassMetrics {
        self.per_class[&label.to_string()]
    }
}

/// 2x2 confusion counts indexed `[gold][pred]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Confusion([[usize; 2]; 2]);

impl Confusion {
    fn add(&mut self, pred: u8, gold: u8) {
        self.0[gold as usize][pred as usize] += 1;
    }

    fn report(&self) -> EvalReport {
        let m = &self.0;
        let n = m[0][0] + m[0][1] + m[1][0] + m[1][1];
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let class = |c: usize| {
            let tp = m[c][c];
            let predicted = m[0][c] + m[1][c];
            let actual = m[c][0] + m[c][1];
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: actual,
            }
        };
        let (c0, c1) = (class(0), class(1));
        EvalReport {
            accuracy: ratio(m[0][0] + m[1][1], n),
            macro_f1: (c0.f1 + c1.f1) / 2.0,
            per_class: BTreeMap::from([("0".to_owned(), c0), ("1".to_owned(), c1)]),
            n,
        }
    }
}

fn check_label(label: u8, what: &str) -> Result<u8> {
    if label > 1 {
        return Err(Error::InvalidArgument(format!("{what} label must be 0 or 1, got {label}")));
    }
    Ok(label)
}

/// Accuracy and macro-F1 over `(predicted, gold)` label pairs. A precision or
/// recall with a zero denominator counts as 0.
pub fn evaluate_labels(pairs: impl IntoIterator<Item = (u8, u8)>) -> Result<EvalReport> {
    let mut confusion = Confusion::default();
    for (pred, gold) in pairs {
        confusion.add(check_label(pred, "predicted")?, check_label(gold, "gold")?);
    }
    Ok(confusion.report())
}

pub fn evaluate(preds: &PredictionSet, golds: &HashMap<String, u8>) -> Result<EvalReport> {
    let pairs = preds
        .iter()
        .map(|(_, cand, label)| {
            golds
                .get(cand)
                .map(|&g| (label, g))
                .ok_or_else(|| Error::MissingGold(cand.to_owned()))
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_labels(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    R,
    W,
}

/// Counts of predictions by dominating score source and correctness.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub counts: BTreeMap<Source, BTreeMap<Outcome, usize>>,
}

impl DistributionTable {
    pub fn get(&self, source: Source, outcome: Outcome) -> usize {
        self.counts
            .get(&source)
            .and_then(|row| row.get(&outcome))
            .copied()
            .unwrap_or(0)
    }

    fn bump(&mut self, source: Source, outcome: Outcome) {
        *self
            .counts
            .entry(source)
            .or_default()
            .entry(outcome)
            .or_insert(0) += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.values().flat_map(BTreeMap::values).sum()
    }

    /// Plain-text rendering with `Higher score | R/W | Count` columns.
    pub fn to_text(&self, title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{title}");
        let _ = writeln!(out, "{:<13} {:<4} {:>6}", "Higher score", "R/W", "Count");
        for source in [Source::Q, Source::S] {
            for outcome in [Outcome::R, Outcome::W] {
                let _ = writeln!(
                    out,
                    "{:<13} {:<4} {:>6}",
                    source.to_string(),
                    format!("{outcome:?}"),
                    self.get(source, outcome)
                );
            }
        }
        out
    }
}

/// Tallies each predicted candidate that has a gold label into its
/// `(Q|S, R|W)` cell.
pub fn distribution_table(
    scores: &[SimilarityRecord],
    preds: &PredictionSet,
    golds: &HashMap<String, u8>,
) -> Result<DistributionTable> {
    let by_candidate: HashMap<&str, &SimilarityRecord> = scores
        .iter()
        .map(|r| (r.candidate_id.as_str(), r))
        .collect();
    let mut table = DistributionTable::default();
    for (_, cand, label) in preds.iter() {
        let record = by_candidate
            .get(cand)
            .ok_or_else(|| Error::MissingScore(cand.to_owned()))?;
        if let Some(&gold) = golds.get(cand) {
            let outcome = if gold == label { Outcome::R } else { Outcome::W };
            table.bump(record.higher_source, outcome);
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `score >= t` is labeled 1.
    AtLeast,
    /// `score < t` is labeled 1.
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    pub grid: Vec<f64>,
    /// Macro-F1 per grid point, aligned with `grid`.
    pub scores: Vec<f64>,
    pub best_threshold: f64,
    pub best_f1: f64,
}

impl ThresholdSweep {
    /// Best is the maximum F1; among equals, the smallest threshold.
    fn from_scores(grid: Vec<f64>, scores: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::InvalidArgument("threshold grid is empty".into()));
        }
        let mut best = 0;
        for i in 1..grid.len() {
            if scores[i] > scores[best] || (scores[i] == scores[best] && grid[i] < grid[best]) {
                best = i;
            }
        }
        Ok(ThresholdSweep {
            best_threshold: grid[best],
            best_f1: scores[best],
            grid,
            scores,
        })
    }

    pub fn to_text(&self, label: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>12} {:>10}", label, "macro-F1");
        for (t, f) in self.grid.iter().zip(&self.scores) {
            let marker = if *t == self.best_threshold { " *" } else { "" };
            let _ = writeln!(out, "{t:>12} {f:>10.4}{marker}");
        }
        let _ = writeln!(out, "best {label} = {} (macro-F1 {:.4})", self.best_threshold, self.best_f1);
        out
    }
}

/// Binarizes `(score, gold)` items at each threshold and keeps macro-F1.
pub fn sweep_threshold(
    items: &[(f64, u8)],
    grid: &[f64],
    direction: Direction,
) -> Result<ThresholdSweep> {
    let scores = grid
        .iter()
        .map(|&t| {
            let pairs = items.iter().map(|&(s, gold)| {
                let hit = match direction {
                    Direction::AtLeast => s >= t,
                    Direction::Below => s < t,
                };
                (u8::from(hit), gold)
            });
            evaluate_labels(pairs).map(|r| r.macro_f1)
        })
        .collect::<Result<Vec<_>>>()?;
    ThresholdSweep::from_scores(grid.to_vec(), scores)
}

/// Re-labels `groups` with the rule's threshold (epsilon or delta, by mode)
/// set to every grid value and reports macro-F1 against `golds`.
pub fn sweep_rule_threshold(
    groups: &[Vec<SimilarityRecord>],
    golds: &HashMap<String, u8>,
    rule: &LabelingRule,
    grid: &[f64],
) -> Result<ThresholdSweep> {
    let scores = grid
        .iter()
        .map(|&t| {
            let preds = predict(groups, &rule.with_threshold(t));
            evaluate(&preds, golds).map(|r| r.macro_f1)
        })
        .collect::<Result<Vec<_>>>()?;
    ThresholdSweep::from_scores(grid.to_vec(), scores)
}

/// One `Model | Acc | F1` row per named report.
pub fn render_results_table(rows: &[(&str, &EvalReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$} | {:>6} | {:>6}", "Model", "Acc", "F1");
    let _ = writeln!(out, "{}", "-".repeat(width + 18));
    for (name, report) in rows {
        let _ = writeln!(
            out,
            "{:<width$} | {:>6.4} | {:>6.4}",
            name, report.accuracy, report.macro_f1
        );
    }
    out
}

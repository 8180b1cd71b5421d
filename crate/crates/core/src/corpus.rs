//! Loading and grouping of the task dataset.
//!
//! The dataset is candidate-centric on disk: every row carries the question,
//! the explanation and one candidate answer. Rows that share the exact same
//! question and explanation text belong to the same question and are grouped
//! into a [`QaRecord`]. Text is kept verbatim (no Unicode normalization).

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    /// Train and dev rows must carry a gold label.
    pub fn requires_labels(self) -> bool {
        !matches!(self, Split::Test)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Ok(Format::Csv),
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("json") => {
                Ok(Format::Jsonl)
            }
            _ => Err(Error::InvalidArgument(format!(
                "cannot infer dataset format from {}",
                path.display()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerCandidate {
    pub candidate_id: String,
    pub question_id: String,
    pub answer_text: String,
    pub gold_label: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRecord {
    pub question_id: String,
    pub question_text: String,
    pub explanation_text: String,
    pub candidates: Vec<AnswerCandidate>,
    pub analysis_text: Option<String>,
    pub complete_analysis_text: Option<String>,
}

impl QaRecord {
    pub fn golds(&self) -> impl Iterator<Item = (&str, Option<u8>)> {
        self.candidates
            .iter()
            .map(|c| (c.candidate_id.as_str(), c.gold_label))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub split_name: Split,
    pub records: Vec<QaRecord>,
    pub candidate_count: usize,
}

impl Dataset {
    pub fn candidates(&self) -> impl Iterator<Item = &AnswerCandidate> {
        self.records.iter().flat_map(|r| r.candidates.iter())
    }

    /// Gold labels keyed by candidate id, for candidates that have one.
    pub fn golds(&self) -> HashMap<String, u8> {
        self.candidates()
            .filter_map(|c| c.gold_label.map(|g| (c.candidate_id.clone(), g)))
            .collect()
    }

    pub fn has_golds(&self) -> bool {
        self.candidate_count > 0 && self.candidates().all(|c| c.gold_label.is_some())
    }
}

/// One candidate row as found on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRow {
    pub question: String,
    pub answer: String,
    pub explanation: String,
    pub label: Option<u8>,
    pub analysis: Option<String>,
    pub complete_analysis: Option<String>,
}

pub fn question_id(split: Split, index: usize) -> String {
    format!("{split}-q{index:04}")
}

pub fn candidate_id(question_id: &str, index: usize) -> String {
    format!("{question_id}-a{index:02}")
}

/// Id under which the summary of a question's explanation is stored in
/// embedding files.
pub fn summary_id(question_id: &str) -> String {
    format!("{question_id}-summary")
}

pub fn load_split(path: &Path, format: Format, split: Split) -> Result<Dataset> {
    let rows = match format {
        Format::Jsonl => read_jsonl_rows(path)?,
        Format::Csv => read_csv_rows(path)?,
    };
    if rows.is_empty() {
        return Err(Error::EmptyDataset(path.to_path_buf()));
    }
    if split.requires_labels() {
        if let Some((line, _)) = rows.iter().find(|(_, r)| r.label.is_none()) {
            return Err(Error::Validation {
                path: path.to_path_buf(),
                line: *line,
                message: format!("{split} row has no label"),
            });
        }
    }
    Ok(dataset_from_rows(
        split,
        rows.into_iter().map(|(_, r)| r).collect(),
    ))
}

/// Builds a dataset from rows, assigning ids in order of first appearance.
pub fn dataset_from_rows(split: Split, rows: Vec<RawRow>) -> Dataset {
    let mut index: HashMap<(String, String), usize> = HashMap::new();
    let mut records: Vec<QaRecord> = Vec::new();
    let candidate_count = rows.len();
    for row in rows {
        let key = (row.question.clone(), row.explanation.clone());
        let slot = *index.entry(key).or_insert_with(|| {
            let qid = question_id(split, records.len());
            records.push(QaRecord {
                question_id: qid,
                question_text: row.question.clone(),
                explanation_text: row.explanation.clone(),
                candidates: Vec::new(),
                analysis_text: None,
                complete_analysis_text: None,
            });
            records.len() - 1
        });
        let record = &mut records[slot];
        if record.analysis_text.is_none() {
            record.analysis_text = row.analysis;
        }
        if record.complete_analysis_text.is_none() {
            record.complete_analysis_text = row.complete_analysis;
        }
        let cid = candidate_id(&record.question_id, record.candidates.len());
        record.candidates.push(AnswerCandidate {
            candidate_id: cid,
            question_id: record.question_id.clone(),
            answer_text: row.answer,
            gold_label: row.label,
        });
    }
    Dataset {
        split_name: split,
        records,
        candidate_count,
    }
}

/// Regroups the candidates of `dataset` by `(question_text, explanation_text)`.
///
/// Records already keyed uniquely come back unchanged; records that share a
/// key are merged into the first one, keeping candidate order.
pub fn group_by_question(dataset: &Dataset) -> Vec<QaRecord> {
    let mut index: HashMap<(&str, &str), usize> = HashMap::new();
    let mut groups: Vec<QaRecord> = Vec::new();
    for record in &dataset.records {
        let key = (
            record.question_text.as_str(),
            record.explanation_text.as_str(),
        );
        match index.get(&key) {
            Some(&slot) => {
                let target = &mut groups[slot];
                let qid = target.question_id.clone();
                target
                    .candidates
                    .extend(record.candidates.iter().cloned().map(|mut c| {
                        c.question_id = qid.clone();
                        c
                    }));
            }
            None => {
                index.insert(key, groups.len());
                groups.push(record.clone());
            }
        }
    }
    groups
}

fn field_string(value: Option<&Value>) -> Option<String> {
    match value? {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    }
}

fn parse_label(raw: &str) -> std::result::Result<Option<u8>, String> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    match raw {
        "0" | "0.0" => Ok(Some(0)),
        "1" | "1.0" => Ok(Some(1)),
        other => Err(format!("label must be 0 or 1, got `{other}`")),
    }
}

fn read_jsonl_rows(path: &Path) -> Result<Vec<(usize, RawRow)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        let value: Value = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| parse_err("expected a JSON object".into()))?;
        let required = |key: &str| {
            field_string(obj.get(key)).ok_or_else(|| parse_err(format!("missing field `{key}`")))
        };
        let label = match obj.get("label") {
            None | Some(Value::Null) => None,
            Some(Value::Number(n)) => parse_label(&n.to_string()).map_err(parse_err)?,
            Some(Value::String(s)) => parse_label(s).map_err(parse_err)?,
            Some(Value::Bool(b)) => Some(u8::from(*b)),
            Some(other) => return Err(parse_err(format!("unexpected label value {other}"))),
        };
        let row = RawRow {
            question: required("question")?,
            answer: required("answer")?,
            explanation: field_string(obj.get("explanation")).unwrap_or_default(),
            label,
            analysis: field_string(obj.get("analysis")),
            complete_analysis: field_string(
                obj.get("complete_analysis")
                    .or_else(|| obj.get("complete analysis")),
            ),
        };
        validate_row(&row).map_err(parse_err)?;
        rows.push((lineno, row));
    }
    Ok(rows)
}

fn read_csv_rows(path: &Path) -> Result<Vec<(usize, RawRow)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |names: &[&str]| {
        headers
            .iter()
            .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
    };
    let header_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message,
    };
    let question = column(&["question"]).ok_or_else(|| header_err("missing column `question`".into()))?;
    let answer = column(&["answer"]).ok_or_else(|| header_err("missing column `answer`".into()))?;
    let explanation = column(&["explanation"]);
    let label = column(&["label"]);
    let analysis = column(&["analysis"]);
    let complete = column(&["complete_analysis", "complete analysis"]);

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let lineno = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        let get = |idx: Option<usize>| idx.and_then(|i| record.get(i)).map(str::to_owned);
        let optional = |idx: Option<usize>| get(idx).filter(|s| !s.is_empty());
        let row = RawRow {
            question: get(Some(question)).unwrap_or_default(),
            answer: get(Some(answer)).unwrap_or_default(),
            explanation: get(explanation).unwrap_or_default(),
            label: match get(label) {
                Some(raw) => parse_label(&raw).map_err(parse_err)?,
                None => None,
            },
            analysis: optional(analysis),
            complete_analysis: optional(complete),
        };
        validate_row(&row).map_err(parse_err)?;
        rows.push((lineno, row));
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

fn validate_row(row: &RawRow) -> std::result::Result<(), String> {
    if row.question.trim().is_empty() {
        return Err("empty question text".into());
    }
    if row.answer.trim().is_empty() {
        return Err("empty answer text".into());
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonlRow<'a> {
    question: &'a str,
    answer: &'a str,
    explanation: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    analysis: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    complete_analysis: Option<&'a str>,
}

/// Writes a dataset back as JSONL, one candidate per line, grouped by question.
pub fn write_jsonl(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in &dataset.records {
        for cand in &record.candidates {
            let row = JsonlRow {
                question: &record.question_text,
                answer: &cand.answer_text,
                explanation: &record.explanation_text,
                label: cand.gold_label,
                analysis: record.analysis_text.as_deref(),
                complete_analysis: record.complete_analysis_text.as_deref(),
            };
            let line = serde_json::to_string(&row).expect("row serializes");
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

//! Vector similarity and distance metrics, per-candidate scoring against the
//! question and the explanation summary, and sigmoid-mean calibration.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{summary_id, QaRecord};
use crate::embeddings::VectorTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cosine,
    Euclidean,
    Manhattan,
}

impl Metric {
    /// Similarities rank high-is-better, distances low-is-better.
    pub fn is_distance(self) -> bool {
        !matches!(self, Metric::Cosine)
    }

    /// True when score `a` ranks strictly ahead of `b` under this metric.
    pub fn outranks(self, a: f64, b: f64) -> bool {
        if self.is_distance() {
            a < b
        } else {
            a > b
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            other => Err(Error::InvalidArgument(format!("unknown metric `{other}`"))),
        }
    }
}

/// Which of the two scores dominated for a candidate: the question-answer
/// score (`Q`) or the answer-summary score (`S`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    Q,
    S,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Q => "Q",
            Source::S => "S",
        })
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Q" => Ok(Source::Q),
            "S" => Ok(Source::S),
            other => Err(Error::InvalidArgument(format!("unknown source `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRecord {
    pub question_id: String,
    pub candidate_id: String,
    pub metric: Metric,
    pub qa_score: f64,
    pub as_score: f64,
    pub combined: f64,
    pub higher_source: Source,
}

pub fn similarity(u: &[f64], v: &[f64], metric: Metric) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let pairs = u.iter().zip(v);
    Ok(match metric {
        Metric::Cosine => {
            let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
            for (a, b) in pairs {
                uv += a * b;
                uu += a * a;
                vv += b * b;
            }
            if uu == 0.0 || vv == 0.0 {
                0.0
            } else {
                // rounding can push |cos| a hair past 1
                (uv / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0)
            }
        }
        Metric::Euclidean => pairs.map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        Metric::Manhattan => pairs.map(|(a, b)| (a - b).abs()).sum(),
    })
}

fn lookup<'a>(vectors: &'a VectorTable, id: &str) -> Result<&'a [f64]> {
    vectors
        .get(id)
        .ok_or_else(|| Error::MissingVector(id.to_owned()))
}

/// Scores every candidate of `group` against the question and against the
/// summary vector (stored under the question's summary id).
pub fn score_candidates(
    group: &QaRecord,
    vectors: &VectorTable,
    metric: Metric,
) -> Result<Vec<SimilarityRecord>> {
    let question = lookup(vectors, &group.question_id)?;
    let summary = lookup(vectors, &summary_id(&group.question_id))?;
    group
        .candidates
        .iter()
        .map(|cand| {
            let answer = lookup(vectors, &cand.candidate_id)?;
            let qa_score = similarity(question, answer, metric)?;
            let as_score = similarity(answer, summary, metric)?;
            Ok(SimilarityRecord {
                question_id: group.question_id.clone(),
                candidate_id: cand.candidate_id.clone(),
                metric,
                qa_score,
                as_score,
                combined: (qa_score + as_score) / 2.0,
                higher_source: if metric.outranks(qa_score, as_score) {
                    Source::Q
                } else {
                    Source::S
                },
            })
        })
        .collect()
}

/// `y_i = sigmoid(x_i - mean(x))`.
pub fn calibrate_sigmoid_mean(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("cannot calibrate an empty vector".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("scores must be finite".into()));
    }
    let mu = x.iter().sum::<f64>() / x.len() as f64;
    Ok(x.iter().map(|v| 1.0 / (1.0 + (-(v - mu)).exp())).collect())
}

pub fn write_scores_csv(records: &[SimilarityRecord], path: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::io(path, e);
    let mut writer = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    writer
        .write_record([
            "question_id",
            "candidate_id",
            "metric",
            "qa_score",
            "as_score",
            "combined",
            "higher_source",
        ])
        .map_err(|e| io(e.into()))?;
    for r in records {
        writer
            .write_record([
                r.question_id.clone(),
                r.candidate_id.clone(),
                r.metric.to_string(),
                format!("{:?}", r.qa_score),
                format!("{:?}", r.as_score),
                format!("{:?}", r.combined),
                r.higher_source.to_string(),
            ])
            .map_err(|e| io(e.into()))?;
    }
    writer.flush().map_err(io)
}

pub fn read_scores_csv(path: &Path) -> Result<Vec<SimilarityRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if row.len() != 7 {
            return Err(parse_err(format!("expected 7 fields, found {}", row.len())));
        }
        let num = |i: usize| {
            row[i]
                .parse::<f64>()
                .map_err(|e| parse_err(format!("field {}: {e}", i + 1)))
        };
        out.push(SimilarityRecord {
            question_id: row[0].to_owned(),
            candidate_id: row[1].to_owned(),
            metric: row[2].parse().map_err(|e: Error| parse_err(e.to_string()))?,
            qa_score: num(3)?,
            as_score: num(4)?,
            combined: num(5)?,
            higher_source: row[6].parse().map_err(|e: Error| parse_err(e.to_string()))?,
        });
    }
    Ok(out)
}

//! Two-level segment-wise summarization of explanation texts.
//!
//! A text is cut into consecutive chunks of a fixed word-token budget, each
//! chunk is summarized by a backend, and the chunk summaries are joined. The
//! joined level-1 summary is then re-chunked at a smaller budget and
//! summarized again to give the final summary.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{token_spans, tokenize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummarySpec {
    pub level1_segment_tokens: usize,
    pub level2_segment_tokens: usize,
    pub joiner: String,
    /// Fraction of sentences kept per chunk by the extractive fallback.
    pub per_segment_output_ratio: f64,
}

impl Default for SummarySpec {
    fn default() -> Self {
        SummarySpec {
            level1_segment_tokens: 1000,
            level2_segment_tokens: 300,
            joiner: " ".to_owned(),
            per_segment_output_ratio: 0.3,
        }
    }
}

impl SummarySpec {
    pub fn validate(&self) -> Result<()> {
        if self.level1_segment_tokens == 0 || self.level2_segment_tokens == 0 {
            return Err(Error::InvalidArgument("segment sizes must be >= 1".into()));
        }
        if self.level2_segment_tokens > self.level1_segment_tokens {
            return Err(Error::InvalidArgument(
                "level 2 segment size exceeds level 1".into(),
            ));
        }
        if !(self.per_segment_output_ratio > 0.0 && self.per_segment_output_ratio <= 1.0) {
            return Err(Error::InvalidArgument(
                "per_segment_output_ratio must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    ExtractiveFallback,
    External,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub question_id: String,
    pub level1_summary: String,
    pub final_summary: String,
    pub backend: BackendKind,
}

/// Summarizes a batch of chunks, returning one summary per chunk in order.
///
/// Failures are reported as [`Error::Summarizer`] with the index of the
/// offending chunk within the batch.
pub trait Summarizer {
    fn kind(&self) -> BackendKind;
    fn summarize_chunks(&self, chunks: &[String]) -> Result<Vec<String>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentitySummarizer;

impl Summarizer for IdentitySummarizer {
    fn kind(&self) -> BackendKind {
        BackendKind::Identity
    }

    fn summarize_chunks(&self, chunks: &[String]) -> Result<Vec<String>> {
        Ok(chunks.to_vec())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExtractiveSummarizer {
    pub ratio: f64,
}

impl Summarizer for ExtractiveSummarizer {
    fn kind(&self) -> BackendKind {
        BackendKind::ExtractiveFallback
    }

    fn summarize_chunks(&self, chunks: &[String]) -> Result<Vec<String>> {
        chunks
            .iter()
            .enumerate()
            .map(|(i, c)| {
                extractive_summarize(c, self.ratio).map_err(|e| Error::Summarizer {
                    chunk: i,
                    message: e.to_string(),
                })
            })
            .collect()
    }
}

/// Runs an external program once per batch. Requests go to its stdin as
/// JSONL `{"id", "text"}`, responses come back on stdout as JSONL
/// `{"id", "summary"}` in any order. Ids are chunk indices as strings.
#[derive(Debug, Clone)]
pub struct ExternalSummarizer {
    pub program: String,
    pub args: Vec<String>,
}

#[derive(Serialize)]
struct Request<'a> {
    id: String,
    text: &'a str,
}

#[derive(Deserialize)]
struct Response {
    id: String,
    summary: String,
}

impl ExternalSummarizer {
    /// Splits a shell-like command line on whitespace.
    pub fn from_command_line(command: &str) -> Result<Self> {
        let mut parts = command.split_whitespace().map(str::to_owned);
        let program = parts
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty summarizer command".into()))?;
        Ok(ExternalSummarizer {
            program,
            args: parts.collect(),
        })
    }
}

impl Summarizer for ExternalSummarizer {
    fn kind(&self) -> BackendKind {
        BackendKind::External
    }

    fn summarize_chunks(&self, chunks: &[String]) -> Result<Vec<String>> {
        if chunks.is_empty() {
            return Ok(Vec::new());
        }
        let fail = |chunk: usize, message: String| Error::Summarizer { chunk, message };
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| fail(0, format!("cannot start `{}`: {e}", self.program)))?;

        let mut stdin = child.stdin.take().expect("stdin is piped");
        let payload: Vec<String> = chunks
            .iter()
            .enumerate()
            .map(|(i, text)| {
                serde_json::to_string(&Request {
                    id: i.to_string(),
                    text,
                })
                .expect("request serializes")
            })
            .collect();
        // write from a separate thread so a chatty child cannot deadlock us
        let writer = std::thread::spawn(move || -> std::io::Result<()> {
            for line in payload {
                writeln!(stdin, "{line}")?;
            }
            Ok(())
        });

        let stdout = child.stdout.take().expect("stdout is piped");
        let mut summaries: HashMap<usize, String> = HashMap::new();
        for (n, line) in BufReader::new(stdout).lines().enumerate() {
            let line = line.map_err(|e| fail(0, format!("reading response: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let resp: Response = serde_json::from_str(&line)
                .map_err(|e| fail(0, format!("response line {}: {e}", n + 1)))?;
            let id = resp
                .id
                .parse::<usize>()
                .ok()
                .filter(|&i| i < chunks.len())
                .ok_or_else(|| fail(0, format!("unknown response id `{}`", resp.id)))?;
            summaries.insert(id, resp.summary);
        }
        let status = child
            .wait()
            .map_err(|e| fail(0, format!("waiting for summarizer: {e}")))?;
        let write_result = writer.join().expect("writer thread panicked");
        if !status.success() {
            return Err(fail(0, format!("summarizer exited with {status}")));
        }
        write_result.map_err(|e| fail(0, format!("writing requests: {e}")))?;

        (0..chunks.len())
            .map(|i| {
                summaries
                    .remove(&i)
                    .ok_or_else(|| fail(i, "no summary returned".into()))
            })
            .collect()
    }
}

/// Splits `text` into consecutive chunks of `max_tokens` word tokens (the
/// last may be shorter). Chunks are slices of the original text cut at token
/// starts, so tokenizing them in order gives back the original tokens.
pub fn segment(text: &str, max_tokens: usize) -> Vec<String> {
    assert!(max_tokens >= 1, "max_tokens must be >= 1");
    let spans = token_spans(text);
    let starts: Vec<usize> = spans
        .iter()
        .step_by(max_tokens)
        .map(|&(s, _)| s)
        .collect();
    starts
        .iter()
        .enumerate()
        .map(|(k, &start)| {
            let begin = if k == 0 { 0 } else { start };
            let end = starts.get(k + 1).copied().unwrap_or(text.len());
            text[begin..end].trim().to_owned()
        })
        .collect()
}

fn summarize_level(
    text: &str,
    max_tokens: usize,
    joiner: &str,
    backend: &dyn Summarizer,
    level: u8,
) -> Result<String> {
    let chunks = segment(text, max_tokens);
    let outputs = backend.summarize_chunks(&chunks).map_err(|e| match e {
        Error::Summarizer { chunk, message } => Error::Summarizer {
            chunk,
            message: format!("level {level}: {message}"),
        },
        other => other,
    })?;
    if outputs.len() != chunks.len() {
        return Err(Error::Summarizer {
            chunk: outputs.len().min(chunks.len()),
            message: format!(
                "level {level}: backend returned {} summaries for {} chunks",
                outputs.len(),
                chunks.len()
            ),
        });
    }
    Ok(outputs.join(joiner))
}

pub fn summarize_segmentwise(
    question_id: &str,
    text: &str,
    spec: &SummarySpec,
    backend: &dyn Summarizer,
) -> Result<SummaryRecord> {
    spec.validate()?;
    let level1 = summarize_level(text, spec.level1_segment_tokens, &spec.joiner, backend, 1)?;
    let final_summary =
        summarize_level(&level1, spec.level2_segment_tokens, &spec.joiner, backend, 2)?;
    Ok(SummaryRecord {
        question_id: question_id.to_owned(),
        level1_summary: level1,
        final_summary,
        backend: backend.kind(),
    })
}

/// Sentences end at `.`, `?` or `!` followed by whitespace.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, ch)) = chars.next() {
        if matches!(ch, '.' | '?' | '!') {
            if let Some(&(_, next)) = chars.peek() {
                if next.is_whitespace() {
                    let end = i + ch.len_utf8();
                    sentences.push(text[start..end].trim());
                    start = end;
                }
            }
        }
    }
    sentences.push(text[start..].trim());
    sentences.retain(|s| !s.is_empty());
    sentences
}

/// Mean over a sentence's tokens of `freq(token) / max freq`, frequencies
/// taken over the whole text. Sentences without tokens score 0.
pub fn sentence_scores(sentences: &[&str]) -> Vec<f64> {
    let tokenized: Vec<Vec<String>> = sentences.iter().map(|s| tokenize(s)).collect();
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for token in tokenized.iter().flatten() {
        *freq.entry(token.as_str()).or_insert(0) += 1;
    }
    let max = freq.values().copied().max().unwrap_or(1) as f64;
    tokenized
        .iter()
        .map(|tokens| {
            if tokens.is_empty() {
                0.0
            } else {
                let total: f64 = tokens.iter().map(|t| freq[t.as_str()] as f64 / max).sum();
                total / tokens.len() as f64
            }
        })
        .collect()
}

/// Keeps the `ceil(ratio * n)` best-scoring sentences in document order.
/// Ties go to the earlier sentence. When every sentence is kept the text is
/// returned unchanged.
pub fn extractive_summarize(text: &str, ratio: f64) -> Result<String> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "ratio must be in (0, 1], got {ratio}"
        )));
    }
    let sentences = split_sentences(text);
    let n = sentences.len();
    let keep = ((ratio * n as f64).ceil() as usize).max(1);
    if keep >= n {
        return Ok(text.to_owned());
    }
    let scores = sentence_scores(&sentences);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = order.into_iter().take(keep).collect();
    chosen.sort_unstable();
    Ok(chosen
        .into_iter()
        .map(|i| sentences[i])
        .collect::<Vec<_>>()
        .join(" "))
}

//! Python bindings for `legalqa-core`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use legalqa_core::corpus::{self, Format, Split};
use legalqa_core::embeddings::{self, EmbeddingMatrix, TrainConfig};
use legalqa_core::evaluation::{self, EvalReport};
use legalqa_core::labeling::{self, LabelMode, LabelingRule};
use legalqa_core::scoring::{self, Metric, SimilarityRecord, Source};
use legalqa_core::summarizer::{self, IdentitySummarizer, SummarySpec};
use legalqa_core::textproc::{self, Weighting};
use legalqa_core::Error;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    textproc::tokenize(text)
}

#[pyfunction]
#[pyo3(signature = (u, v, metric = "cosine"))]
fn similarity(u: Vec<f64>, v: Vec<f64>, metric: &str) -> PyResult<f64> {
    scoring::similarity(&u, &v, parse::<Metric>(metric)?).map_err(to_py)
}

/// `sigmoid(x - mean(x))` elementwise.
#[pyfunction]
fn calibrate(x: Vec<f64>) -> PyResult<Vec<f64>> {
    scoring::calibrate_sigmoid_mean(&x).map_err(to_py)
}

fn rule_from(mode: &str, replacement: bool, epsilon: f64, delta: f64) -> PyResult<LabelingRule> {
    let mode = match mode {
        "similarity" => LabelMode::Similarity,
        "distance" => LabelMode::Distance,
        other => {
            return Err(PyValueError::new_err(format!(
                "mode must be `similarity` or `distance`, got `{other}`"
            )))
        }
    };
    let rule = LabelingRule {
        mode,
        replacement_enabled: replacement,
        epsilon,
        delta,
    };
    rule.validate().map_err(to_py)?;
    Ok(rule)
}

/// Labels one question's candidates; exactly one gets 1.
#[pyfunction]
#[pyo3(signature = (scores, candidate_ids = None, mode = "similarity", replacement = true,
                    epsilon = labeling::DEFAULT_EPSILON, delta = labeling::DEFAULT_DELTA))]
fn label_group(
    scores: Vec<f64>,
    candidate_ids: Option<Vec<String>>,
    mode: &str,
    replacement: bool,
    epsilon: f64,
    delta: f64,
) -> PyResult<Vec<u32>> {
    let rule = rule_from(mode, replacement, epsilon, delta)?;
    let ids = candidate_ids.unwrap_or_else(|| {
        (0..scores.len())
            .map(|k| corpus::candidate_id("q", k))
            .collect()
    });
    if ids.len() != scores.len() {
        return Err(PyValueError::new_err("scores and candidate_ids differ in length"));
    }
    let metric = if rule.mode == LabelMode::Distance {
        Metric::Euclidean
    } else {
        Metric::Cosine
    };
    let records: Vec<SimilarityRecord> = scores
        .iter()
        .zip(ids)
        .map(|(&s, id)| SimilarityRecord {
            question_id: "q".into(),
            candidate_id: id,
            metric,
            qa_score: s,
            as_score: s,
            combined: s,
            higher_source: Source::S,
        })
        .collect();
    Ok(labeling::label_group(&records, &rule)
        .into_iter()
        .map(u32::from)
        .collect())
}

#[pyclass(name = "EvalReport", frozen, get_all)]
struct PyEvalReport {
    accuracy: f64,
    macro_f1: f64,
    n: usize,
    /// label -> (precision, recall, f1, support)
    per_class: BTreeMap<String, (f64, f64, f64, usize)>,
}

impl From<EvalReport> for PyEvalReport {
    fn from(r: EvalReport) -> Self {
        PyEvalReport {
            accuracy: r.accuracy,
            macro_f1: r.macro_f1,
            n: r.n,
            per_class: r
                .per_class
                .into_iter()
                .map(|(k, c)| (k, (c.precision, c.recall, c.f1, c.support)))
                .collect(),
        }
    }
}

#[pymethods]
impl PyEvalReport {
    fn __repr__(&self) -> String {
        format!(
            "EvalReport(accuracy={:.4}, macro_f1={:.4}, n={})",
            self.accuracy, self.macro_f1, self.n
        )
    }
}

/// Candidate-level accuracy and macro-F1 over aligned gold/predicted labels.
#[pyfunction]
fn evaluate(gold: Vec<u8>, predicted: Vec<u8>) -> PyResult<PyEvalReport> {
    if gold.len() != predicted.len() {
        return Err(PyValueError::new_err("gold and predicted differ in length"));
    }
    evaluation::evaluate_labels(gold.into_iter().zip(predicted))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
fn segment(text: &str, max_tokens: usize) -> PyResult<Vec<String>> {
    if max_tokens == 0 {
        return Err(PyValueError::new_err("max_tokens must be positive"));
    }
    Ok(summarizer::segment(text, max_tokens))
}

#[pyfunction]
#[pyo3(signature = (text, ratio = 0.3))]
fn extractive_summarize(text: &str, ratio: f64) -> PyResult<String> {
    summarizer::extractive_summarize(text, ratio).map_err(to_py)
}

/// Two-level segment-wise summary; returns `(level1, final)`.
#[pyfunction]
#[pyo3(signature = (text, backend = "extractive", ratio = 0.3, level1_tokens = 1000, level2_tokens = 300))]
fn summarize(
    text: &str,
    backend: &str,
    ratio: f64,
    level1_tokens: usize,
    level2_tokens: usize,
) -> PyResult<(String, String)> {
    let spec = SummarySpec {
        level1_segment_tokens: level1_tokens,
        level2_segment_tokens: level2_tokens,
        per_segment_output_ratio: ratio,
        ..SummarySpec::default()
    };
    spec.validate().map_err(to_py)?;
    let record = match backend {
        "identity" => summarizer::summarize_segmentwise("q", text, &spec, &IdentitySummarizer),
        "extractive" => summarizer::summarize_segmentwise(
            "q",
            text,
            &spec,
            &summarizer::ExtractiveSummarizer { ratio },
        ),
        other => {
            return Err(PyValueError::new_err(format!(
                "backend must be `identity` or `extractive`, got `{other}`"
            )))
        }
    }
    .map_err(to_py)?;
    Ok((record.level1_summary, record.final_summary))
}

/// Id-keyed vectors in the plain-text embedding file format.
#[pyclass(name = "VectorTable")]
struct PyVectorTable {
    inner: embeddings::VectorTable,
}

#[pymethods]
impl PyVectorTable {
    #[new]
    #[pyo3(signature = (dim = 0))]
    fn new(dim: usize) -> Self {
        PyVectorTable {
            inner: embeddings::VectorTable::new(dim),
        }
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(PyVectorTable {
            inner: embeddings::VectorTable::read(&path).map_err(to_py)?,
        })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write(&path).map_err(to_py)
    }

    fn insert(&mut self, id: String, vector: Vec<f64>) -> PyResult<()> {
        self.inner.insert(id, vector).map_err(to_py)
    }

    fn get(&self, id: &str) -> Option<Vec<f64>> {
        self.inner.get(id).map(<[f64]>::to_vec)
    }

    fn ids(&self) -> Vec<String> {
        self.inner.ids().map(str::to_owned).collect()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, id: &str) -> bool {
        self.inner.get(id).is_some()
    }
}

fn train_config(
    base: TrainConfig,
    dim: Option<usize>,
    window: Option<usize>,
    epochs: Option<usize>,
    seed: u64,
) -> TrainConfig {
    TrainConfig {
        dim: dim.unwrap_or(base.dim),
        window: window.unwrap_or(base.window),
        epochs: epochs.unwrap_or(base.epochs),
        seed,
        ..base
    }
}

fn into_table(matrix: &EmbeddingMatrix, vocab: &textproc::Vocabulary) -> PyResult<PyVectorTable> {
    Ok(PyVectorTable {
        inner: embeddings::VectorTable::from_matrix(matrix, vocab).map_err(to_py)?,
    })
}

/// Skip-gram word vectors for a tokenized corpus, keyed by token.
#[pyfunction]
#[pyo3(signature = (sentences, dim = None, window = None, epochs = None, seed = 1, min_count = 1))]
fn train_word2vec(
    sentences: Vec<Vec<String>>,
    dim: Option<usize>,
    window: Option<usize>,
    epochs: Option<usize>,
    seed: u64,
    min_count: u64,
) -> PyResult<PyVectorTable> {
    let config = train_config(TrainConfig::word2vec(), dim, window, epochs, seed);
    let vocab = textproc::build_vocab(&sentences, min_count).map_err(to_py)?;
    let trained = embeddings::train_word2vec(&sentences, &vocab, &config).map_err(to_py)?;
    into_table(&trained.matrix, &vocab)
}

/// GloVe word vectors for a tokenized corpus, keyed by token.
#[pyfunction]
#[pyo3(signature = (sentences, dim = None, window = None, epochs = None, seed = 1, min_count = 1))]
fn train_glove(
    sentences: Vec<Vec<String>>,
    dim: Option<usize>,
    window: Option<usize>,
    epochs: Option<usize>,
    seed: u64,
    min_count: u64,
) -> PyResult<PyVectorTable> {
    let config = train_config(TrainConfig::glove(), dim, window, epochs, seed);
    let vocab = textproc::build_vocab(&sentences, min_count).map_err(to_py)?;
    let table =
        textproc::count_cooccurrence(&sentences, &vocab, config.window, Weighting::InverseDistance)
            .map_err(to_py)?;
    let trained = embeddings::train_glove(&table, vocab.len(), &config).map_err(to_py)?;
    into_table(&trained.matrix, &vocab)
}

/// Mean of the vectors of `tokens` found in `table`; zeros when none are.
#[pyfunction]
fn pool(tokens: Vec<String>, table: &PyVectorTable) -> Vec<f64> {
    let dim = table.inner.dim();
    let mut sum = vec![0.0; dim];
    let mut hits = 0usize;
    for v in tokens.iter().filter_map(|t| table.inner.get(t)) {
        sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        hits += 1;
    }
    if hits > 0 {
        sum.iter_mut().for_each(|s| *s /= hits as f64);
    }
    sum
}

/// One grouped question with its candidates.
#[pyclass(name = "QaRecord", frozen, get_all)]
struct PyQaRecord {
    question_id: String,
    question_text: String,
    explanation_text: String,
    summary_id: String,
    /// `(candidate_id, answer_text, gold_label)`
    candidates: Vec<(String, String, Option<u8>)>,
}

/// Loads a JSONL or CSV split and groups it by question.
#[pyfunction]
#[pyo3(signature = (path, split = "dev"))]
fn load_split(path: PathBuf, split: &str) -> PyResult<Vec<PyQaRecord>> {
    let split = parse::<Split>(split)?;
    let format = Format::from_path(&path).map_err(to_py)?;
    let dataset = corpus::load_split(&path, format, split).map_err(to_py)?;
    Ok(corpus::group_by_question(&dataset)
        .into_iter()
        .map(|g| PyQaRecord {
            summary_id: corpus::summary_id(&g.question_id),
            candidates: g
                .candidates
                .into_iter()
                .map(|c| (c.candidate_id, c.answer_text, c.gold_label))
                .collect(),
            question_id: g.question_id,
            question_text: g.question_text,
            explanation_text: g.explanation_text,
        })
        .collect())
}

#[pymodule]
fn legalqa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(label_group, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(extractive_summarize, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(train_word2vec, m)?)?;
    m.add_function(wrap_pyfunction!(train_glove, m)?)?;
    m.add_function(wrap_pyfunction!(pool, m)?)?;
    m.add_function(wrap_pyfunction!(load_split, m)?)?;
    m.add_class::<PyVectorTable>()?;
    m.add_class::<PyEvalReport>()?;
    m.add_class::<PyQaRecord>()?;
    Ok(())
}

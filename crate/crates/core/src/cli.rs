//! Pipeline orchestration behind the `legalqa` binary.
//!
//! Each `cmd_*` function validates its inputs before writing anything and
//! returns a [`CommandError`] whose [`CommandError::exit_code`] is 1 for
//! validation problems and 2 for runtime failures.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::corpus::{group_by_question, load_split, summary_id, Dataset, Format, QaRecord, Split};
use crate::embeddings::{
    load_external_embeddings, pool_sentence, train_glove, train_word2vec, EmbeddingMatrix,
    EmbeddingSource, TrainConfig, VectorTable,
};
use crate::error::Error;
use crate::evaluation::{
    distribution_table, evaluate, render_results_table, sweep_rule_threshold, DistributionTable,
    EvalReport, ThresholdSweep,
};
use crate::labeling::{predict, LabelMode, LabelingRule, PredictionSet};
use crate::scoring::{score_candidates, write_scores_csv, Metric, SimilarityRecord};
use crate::summarizer::{
    summarize_segmentwise, ExternalSummarizer, ExtractiveSummarizer, SummaryRecord, SummarySpec,
    Summarizer,
};
use crate::textproc::{build_vocab, count_cooccurrence, tokenize, Vocabulary, Weighting};

#[derive(Debug)]
pub enum CommandError {
    Validation(String),
    Runtime(Error),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Validation(_) => 1,
            CommandError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommandError::Validation(msg) => write!(f, "invalid configuration: {msg}"),
            CommandError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CommandError {}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        CommandError::Runtime(e)
    }
}

pub type CommandResult<T> = std::result::Result<T, CommandError>;

fn invalid<T>(msg: impl Into<String>) -> CommandResult<T> {
    Err(CommandError::Validation(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    Word2vecCosine,
    GloveCosine,
    TransformerCosine,
    TransformerEuclidean,
    TransformerManhattan,
}

impl System {
    pub const ALL: [System; 5] = [
        System::Word2vecCosine,
        System::GloveCosine,
        System::TransformerCosine,
        System::TransformerEuclidean,
        System::TransformerManhattan,
    ];

    pub fn metric(self) -> Metric {
        match self {
            System::TransformerEuclidean => Metric::Euclidean,
            System::TransformerManhattan => Metric::Manhattan,
            _ => Metric::Cosine,
        }
    }

    /// The trained embedding a system pools, `None` for external vectors.
    pub fn trained_source(self) -> Option<EmbeddingSource> {
        match self {
            System::Word2vecCosine => Some(EmbeddingSource::Word2vec),
            System::GloveCosine => Some(EmbeddingSource::Glove),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            System::Word2vecCosine => "word2vec-cosine",
            System::GloveCosine => "glove-cosine",
            System::TransformerCosine => "transformer-cosine",
            System::TransformerEuclidean => "transformer-euclidean",
            System::TransformerManhattan => "transformer-manhattan",
        }
    }

    pub fn default_rule(self) -> LabelingRule {
        if self.metric().is_distance() {
            LabelingRule::distance()
        } else {
            LabelingRule::similarity()
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        System::ALL
            .into_iter()
            .find(|sys| sys.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = System::ALL.iter().map(|s| s.as_str()).collect();
                format!("unknown system `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub embeddings_dir: PathBuf,
    pub summaries_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Transformer vectors; defaults to `<embeddings_dir>/transformer.vec`.
    pub external_embeddings: Option<PathBuf>,
}

impl Paths {
    pub fn split_path(&self, split: Split) -> Option<&Path> {
        match split {
            Split::Train => self.train.as_deref(),
            Split::Dev => self.dev.as_deref(),
            Split::Test => self.test.as_deref(),
        }
    }

    pub fn external_embeddings(&self) -> PathBuf {
        self.external_embeddings
            .clone()
            .unwrap_or_else(|| self.embeddings_dir.join("transformer.vec"))
    }

    pub fn trained_embeddings(&self, source: EmbeddingSource) -> PathBuf {
        let name = match source {
            EmbeddingSource::Word2vec => "word2vec.vec",
            EmbeddingSource::Glove => "glove.vec",
            EmbeddingSource::External => "transformer.vec",
        };
        self.embeddings_dir.join(name)
    }

    pub fn vocabulary(&self) -> PathBuf {
        self.embeddings_dir.join("vocab.tsv")
    }
}

/// Declarative run configuration, read from JSON; command-line flags
/// override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub paths: Paths,
    pub system: System,
    /// Split scored by `predict`.
    pub split: Split,
    pub rule: LabelingRule,
    pub word2vec: TrainConfig,
    pub glove: TrainConfig,
    pub summary_spec: SummarySpec,
    /// External summarizer command; the extractive fallback when absent.
    pub summarizer_command: Option<String>,
    /// Seeds both trainers.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths {
                embeddings_dir: "embeddings".into(),
                summaries_dir: "summaries".into(),
                output_dir: "output".into(),
                ..Paths::default()
            },
            system: System::Word2vecCosine,
            split: Split::Dev,
            rule: LabelingRule::similarity(),
            word2vec: TrainConfig::word2vec(),
            glove: TrainConfig::glove(),
            summary_spec: SummarySpec::default(),
            summarizer_command: None,
            seed: 1,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> CommandResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CommandError::Validation(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CommandError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn word2vec_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.word2vec.clone()
        }
    }

    pub fn glove_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.glove.clone()
        }
    }

    /// Checks the parts every command relies on.
    pub fn validate(&self) -> CommandResult<()> {
        let expected = LabelMode::for_metric(self.system.metric());
        if self.rule.mode != expected {
            return invalid(format!(
                "system {} needs a {:?} labeling rule, config has {:?}",
                self.system, expected, self.rule.mode
            ));
        }
        self.rule.validate().map_err(|e| CommandError::Validation(e.to_string()))?;
        self.summary_spec
            .validate()
            .map_err(|e| CommandError::Validation(e.to_string()))?;
        for cfg in [&self.word2vec, &self.glove] {
            cfg.validate().map_err(|e| CommandError::Validation(e.to_string()))?;
        }
        for split in [Split::Train, Split::Dev, Split::Test] {
            if let Some(p) = self.paths.split_path(split) {
                if !p.is_file() {
                    return invalid(format!("{split} file {} does not exist", p.display()));
                }
            }
        }
        Ok(())
    }

    fn configured_splits(&self) -> Vec<(Split, &Path)> {
        [Split::Train, Split::Dev, Split::Test]
            .into_iter()
            .filter_map(|s| self.paths.split_path(s).map(|p| (s, p)))
            .collect()
    }

    fn summarizer(&self) -> CommandResult<Box<dyn Summarizer>> {
        Ok(match &self.summarizer_command {
            Some(cmd) => Box::new(
                ExternalSummarizer::from_command_line(cmd)
                    .map_err(|e| CommandError::Validation(e.to_string()))?,
            ),
            None => Box::new(ExtractiveSummarizer {
                ratio: self.summary_spec.per_segment_output_ratio,
            }),
        })
    }

    /// Output file stem, e.g. `word2vec-cosine-noreplace.dev`.
    pub fn output_stem(&self) -> String {
        let suffix = if self.rule.replacement_enabled { "" } else { "-noreplace" };
        format!("{}{suffix}.{}", self.system, self.split)
    }
}

/// Loads a split, treating an empty file as an empty dataset.
pub fn load_dataset(path: &Path, split: Split) -> crate::Result<Dataset> {
    let format = Format::from_path(path)?;
    match load_split(path, format, split) {
        Err(Error::EmptyDataset(_)) => Ok(Dataset {
            split_name: split,
            records: Vec::new(),
            candidate_count: 0,
        }),
        other => other,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> crate::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> crate::Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrepareReport {
    pub split: Split,
    pub candidates: usize,
    pub questions: usize,
    pub directory: PathBuf,
}

fn summarize_split(
    groups: &[QaRecord],
    spec: &SummarySpec,
    backend: &dyn Summarizer,
    dir: &Path,
) -> crate::Result<()> {
    for group in groups {
        if group.explanation_text.trim().is_empty() {
            warn!("{}: empty explanation, writing empty summary", group.question_id);
        }
        let record = summarize_segmentwise(
            &group.question_id,
            &group.explanation_text,
            spec,
            backend,
        )
        .map_err(|e| match e {
            Error::Summarizer { chunk, message } => Error::Summarizer {
                chunk,
                message: format!("{}: {message}", group.question_id),
            },
            other => other,
        })?;
        write_json(&dir.join(format!("{}.json", group.question_id)), &record)?;
    }
    Ok(())
}

/// Writes one summary file per question under `<summaries_dir>/<split>/`.
///
/// Each split is written to a scratch directory first and moved into place
/// only when every question succeeded.
pub fn cmd_prepare(config: &RunConfig) -> CommandResult<Vec<PrepareReport>> {
    config.validate()?;
    let splits = config.configured_splits();
    if splits.is_empty() {
        return invalid("no dataset split configured");
    }
    let backend = config.summarizer()?;
    let datasets = splits
        .iter()
        .map(|&(split, path)| load_dataset(path, split))
        .collect::<crate::Result<Vec<_>>>()?;

    create_dir(&config.paths.summaries_dir)?;
    let mut reports = Vec::new();
    for dataset in datasets {
        let split = dataset.split_name;
        let groups = group_by_question(&dataset);
        let final_dir = config.paths.summaries_dir.join(split.as_str());
        let scratch = config.paths.summaries_dir.join(format!(".{split}.partial"));
        if scratch.exists() {
            fs::remove_dir_all(&scratch).map_err(|e| Error::io(&scratch, e))?;
        }
        create_dir(&scratch)?;
        if let Err(e) = summarize_split(&groups, &config.summary_spec, backend.as_ref(), &scratch) {
            let _ = fs::remove_dir_all(&scratch);
            return Err(e.into());
        }
        if final_dir.exists() {
            fs::remove_dir_all(&final_dir).map_err(|e| Error::io(&final_dir, e))?;
        }
        fs::rename(&scratch, &final_dir).map_err(|e| Error::io(&final_dir, e))?;
        info!("{split}: {} summaries in {}", groups.len(), final_dir.display());
        reports.push(PrepareReport {
            split,
            candidates: dataset.candidate_count,
            questions: groups.len(),
            directory: final_dir,
        });
    }
    Ok(reports)
}

/// Summaries of every group, keyed by question id.
pub fn load_summaries(
    dir: &Path,
    split: Split,
    groups: &[QaRecord],
) -> CommandResult<HashMap<String, SummaryRecord>> {
    let split_dir = dir.join(split.as_str());
    let mut out = HashMap::with_capacity(groups.len());
    for group in groups {
        let path = split_dir.join(format!("{}.json", group.question_id));
        let text = fs::read_to_string(&path).map_err(|_| {
            CommandError::Validation(format!(
                "missing summary {}; run `legalqa prepare` first",
                path.display()
            ))
        })?;
        let record: SummaryRecord = serde_json::from_str(&text).map_err(|e| {
            CommandError::Runtime(Error::Parse {
                path: path.clone(),
                line: e.line(),
                message: e.to_string(),
            })
        })?;
        out.insert(group.question_id.clone(), record);
    }
    Ok(out)
}

/// Tokenized question, answer and summary texts of the configured splits,
/// each distinct text once, in a stable order.
fn training_corpus(config: &RunConfig) -> CommandResult<Vec<Vec<String>>> {
    let mut seen: HashSet<String> = HashSet::new();
    let mut corpus = Vec::new();
    let mut push = |text: &str| {
        if seen.insert(text.to_owned()) {
            let tokens = tokenize(text);
            if !tokens.is_empty() {
                corpus.push(tokens);
            }
        }
    };
    for (split, path) in config.configured_splits() {
        let dataset = load_dataset(path, split)?;
        let groups = group_by_question(&dataset);
        let summaries = load_summaries(&config.paths.summaries_dir, split, &groups).ok();
        if summaries.is_none() {
            warn!("{split}: no summaries found, training on raw explanations");
        }
        for group in &groups {
            push(&group.question_text);
            for cand in &group.candidates {
                push(&cand.answer_text);
            }
            match summaries.as_ref().and_then(|s| s.get(&group.question_id)) {
                Some(summary) => push(&summary.final_summary),
                None => push(&group.explanation_text),
            }
        }
    }
    Ok(corpus)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub source: EmbeddingSource,
    pub vocab_size: usize,
    pub epoch_loss: Vec<f64>,
    pub path: PathBuf,
}

/// Trains word2vec and/or GloVe vectors on the configured splits and writes
/// `<embeddings_dir>/{word2vec,glove}.vec` plus `vocab.tsv`.
pub fn cmd_train_embeddings(
    config: &RunConfig,
    sources: &[EmbeddingSource],
) -> CommandResult<Vec<TrainReport>> {
    config.validate()?;
    if sources.is_empty() || sources.contains(&EmbeddingSource::External) {
        return invalid("choose word2vec and/or glove to train");
    }
    let corpus = training_corpus(config)?;
    if corpus.is_empty() {
        return invalid("no text to train on; configure at least one non-empty split");
    }
    let vocab = build_vocab(&corpus, 1)?;
    create_dir(&config.paths.embeddings_dir)?;
    vocab.write_tsv(&config.paths.vocabulary())?;

    let mut reports = Vec::new();
    for &source in sources {
        let trained = match source {
            EmbeddingSource::Word2vec => train_word2vec(&corpus, &vocab, &config.word2vec_config())?,
            _ => {
                let glove = config.glove_config();
                let table =
                    count_cooccurrence(&corpus, &vocab, glove.window, Weighting::InverseDistance)?;
                train_glove(&table, vocab.len(), &glove)?
            }
        };
        let path = config.paths.trained_embeddings(source);
        VectorTable::from_matrix(&trained.matrix, &vocab)?.write(&path)?;
        info!("{source:?}: {} words -> {}", vocab.len(), path.display());
        reports.push(TrainReport {
            source,
            vocab_size: vocab.len(),
            epoch_loss: trained.epoch_loss,
            path,
        });
    }
    Ok(reports)
}

/// Reloads a trained matrix with its vocabulary.
pub fn load_trained(
    paths: &Paths,
    source: EmbeddingSource,
) -> CommandResult<(Vocabulary, EmbeddingMatrix)> {
    let vec_path = paths.trained_embeddings(source);
    let vocab_path = paths.vocabulary();
    if !vec_path.is_file() || !vocab_path.is_file() {
        return invalid(format!(
            "{} or {} missing; run `legalqa train-embeddings` first",
            vec_path.display(),
            vocab_path.display()
        ));
    }
    let vocab = Vocabulary::read_tsv(&vocab_path)?;
    let table = VectorTable::read(&vec_path)?;
    let mut values = Vec::with_capacity(vocab.len() * table.dim());
    for token in vocab.tokens() {
        let v = table
            .get(token)
            .ok_or_else(|| CommandError::Runtime(Error::MissingVector(token.clone())))?;
        values.extend_from_slice(v);
    }
    let matrix = EmbeddingMatrix::new(table.dim().max(1), values, source)?;
    Ok((vocab, matrix))
}

/// Mean-pooled vectors for every question, answer and summary of `groups`.
pub fn pooled_text_vectors(
    groups: &[QaRecord],
    summaries: &HashMap<String, SummaryRecord>,
    vocab: &Vocabulary,
    matrix: &EmbeddingMatrix,
) -> crate::Result<VectorTable> {
    let mut table = VectorTable::new(matrix.dim());
    let embed = |text: &str| pool_sentence(&tokenize(text), matrix, vocab).values;
    for group in groups {
        table.insert(group.question_id.clone(), embed(&group.question_text))?;
        for cand in &group.candidates {
            table.insert(cand.candidate_id.clone(), embed(&cand.answer_text))?;
        }
        let summary = summaries
            .get(&group.question_id)
            .map_or("", |s| s.final_summary.as_str());
        table.insert(summary_id(&group.question_id), embed(summary))?;
    }
    Ok(table)
}

/// Scores every group of `split` under the configured system.
pub fn score_split(
    config: &RunConfig,
    split: Split,
) -> CommandResult<(Dataset, Vec<Vec<SimilarityRecord>>)> {
    let path = config.paths.split_path(split).ok_or_else(|| {
        CommandError::Validation(format!("no {split} file configured"))
    })?;
    let dataset = load_dataset(path, split)?;
    let groups = group_by_question(&dataset);
    let vectors = match config.system.trained_source() {
        Some(source) => {
            let summaries = load_summaries(&config.paths.summaries_dir, split, &groups)?;
            let (vocab, matrix) = load_trained(&config.paths, source)?;
            pooled_text_vectors(&groups, &summaries, &vocab, &matrix)?
        }
        None => {
            let path = config.paths.external_embeddings();
            if !path.is_file() {
                return invalid(format!(
                    "{} not found; export transformer embeddings for this split with the \
                     embedding exporter first",
                    path.display()
                ));
            }
            load_external_embeddings(&path)?
        }
    };
    let scored = groups
        .iter()
        .map(|g| score_candidates(g, &vectors, config.system.metric()))
        .collect::<crate::Result<Vec<_>>>()?;
    Ok((dataset, scored))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunProvenance {
    pub system: System,
    pub split: Split,
    pub rule: LabelingRule,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictOutcome {
    pub provenance: RunProvenance,
    pub predictions_path: PathBuf,
    pub scores_path: PathBuf,
    pub report: Option<EvalReport>,
    pub distribution: Option<DistributionTable>,
}

/// Scores, labels and (with gold labels) evaluates one split.
pub fn cmd_predict(config: &RunConfig) -> CommandResult<PredictOutcome> {
    config.validate()?;
    let (dataset, scored) = score_split(config, config.split)?;
    let preds = predict(&scored, &config.rule);

    let out_dir = &config.paths.output_dir;
    create_dir(out_dir)?;
    let stem = config.output_stem();
    let predictions_path = out_dir.join(format!("{stem}.predictions.csv"));
    let scores_path = out_dir.join(format!("{stem}.scores.csv"));
    preds.write_csv(&predictions_path)?;
    let flat: Vec<SimilarityRecord> = scored.into_iter().flatten().collect();
    write_scores_csv(&flat, &scores_path)?;

    let provenance = RunProvenance {
        system: config.system,
        split: config.split,
        rule: config.rule,
        seed: config.seed,
    };
    let (report, distribution) = if dataset.has_golds() {
        let golds = dataset.golds();
        let report = evaluate(&preds, &golds)?;
        let table = distribution_table(&flat, &preds, &golds)?;
        write_json(
            &out_dir.join(format!("{stem}.report.json")),
            &serde_json::json!({
                "provenance": &provenance,
                "report": &report,
                "distribution": &table,
            }),
        )?;
        let text = format!(
            "system {} | split {} | seed {} | rule {:?}\n\n{}\n{}",
            config.system,
            config.split,
            config.seed,
            config.rule,
            render_results_table(&[(config.system.as_str(), &report)]),
            table.to_text(&format!("{} set counts:", config.split)),
        );
        fs::write(out_dir.join(format!("{stem}.report.txt")), text)
            .map_err(|e| Error::io(out_dir, e))?;
        (Some(report), Some(table))
    } else {
        (None, None)
    };
    Ok(PredictOutcome {
        provenance,
        predictions_path,
        scores_path,
        report,
        distribution,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateOutcome {
    pub report: EvalReport,
    pub distribution: Option<DistributionTable>,
}

/// Evaluates a predictions CSV against the gold labels of a dataset file.
pub fn cmd_evaluate(
    predictions: &Path,
    dataset: &Path,
    split: Split,
    scores: Option<&Path>,
) -> CommandResult<EvaluateOutcome> {
    for p in [Some(predictions), Some(dataset), scores].into_iter().flatten() {
        if !p.is_file() {
            return invalid(format!("{} does not exist", p.display()));
        }
    }
    let data = load_dataset(dataset, split)?;
    if !data.has_golds() {
        return invalid(format!("{} has no gold labels", dataset.display()));
    }
    let golds = data.golds();
    let preds = PredictionSet::read_csv(predictions)?;
    let report = evaluate(&preds, &golds)?;
    let distribution = match scores {
        Some(path) => {
            let records = crate::scoring::read_scores_csv(path)?;
            Some(distribution_table(&records, &preds, &golds)?)
        }
        None => None,
    };
    Ok(EvaluateOutcome {
        report,
        distribution,
    })
}

/// Parses `a,b,c` or `start:stop:step` (inclusive of `stop`).
pub fn parse_grid(spec: &str) -> CommandResult<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| CommandError::Validation(format!("bad grid value `{s}`: {e}")))
    };
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return invalid("range grid must be start:stop:step");
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step.is_nan() || step <= 0.0 || stop < start {
            return invalid("range grid needs step > 0 and stop >= start");
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + i as f64 * step).collect()
    } else {
        spec.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(num)
            .collect::<CommandResult<Vec<_>>>()?
    };
    if grid.is_empty() {
        return invalid("threshold grid is empty");
    }
    Ok(grid)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub provenance: RunProvenance,
    pub splits: Vec<Split>,
    pub sweep: ThresholdSweep,
}

/// Sweeps the rule's threshold (epsilon for similarity systems, delta for
/// distance systems) over `grid` on the pooled candidates of `splits`.
pub fn cmd_sweep(config: &RunConfig, grid: &[f64], splits: &[Split]) -> CommandResult<SweepOutcome> {
    config.validate()?;
    if grid.is_empty() {
        return invalid("threshold grid is empty");
    }
    if splits.is_empty() {
        return invalid("no split to sweep on");
    }
    let mut all_groups = Vec::new();
    let mut golds = HashMap::new();
    for &split in splits {
        let (dataset, scored) = score_split(config, split)?;
        if !dataset.has_golds() {
            return invalid(format!("{split} split has no gold labels"));
        }
        golds.extend(dataset.golds());
        all_groups.extend(scored);
    }
    let sweep = sweep_rule_threshold(&all_groups, &golds, &config.rule, grid)?;

    create_dir(&config.paths.output_dir)?;
    let names: Vec<&str> = splits.iter().map(|s| s.as_str()).collect();
    let stem = format!("{}.sweep.{}", config.system, names.join("+"));
    let outcome = SweepOutcome {
        provenance: RunProvenance {
            system: config.system,
            split: splits[0],
            rule: config.rule,
            seed: config.seed,
        },
        splits: splits.to_vec(),
        sweep,
    };
    write_json(&config.paths.output_dir.join(format!("{stem}.json")), &outcome)?;
    let label = match config.rule.mode {
        LabelMode::Similarity => "epsilon",
        LabelMode::Distance => "delta",
    };
    fs::write(
        config.paths.output_dir.join(format!("{stem}.txt")),
        outcome.sweep.to_text(label),
    )
    .map_err(|e| Error::io(&config.paths.output_dir, e))?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0,0.0005, 0.001").unwrap(), vec![0.0, 0.0005, 0.001]);
        let g = parse_grid("0:0.002:0.0001").unwrap();
        assert_eq!(g.len(), 21);
        assert!((g[20] - 0.002).abs() < 1e-12);
        assert!(matches!(parse_grid(""), Err(CommandError::Validation(_))));
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn system_names_round_trip() {
        for s in System::ALL {
            assert_eq!(s.as_str().parse::<System>().unwrap(), s);
        }
        assert!("bert".parse::<System>().is_err());
        assert_eq!(System::TransformerManhattan.metric(), Metric::Manhattan);
    }

    #[test]
    fn distance_system_needs_distance_rule() {
        let config = RunConfig {
            system: System::TransformerEuclidean,
            ..RunConfig::default()
        };
        let err = config.validate().unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let config = RunConfig {
            rule: System::TransformerEuclidean.default_rule(),
            ..config
        };
        config.validate().unwrap();
    }

    #[test]
    fn config_json_defaults() {
        let config: RunConfig =
            serde_json::from_str(r#"{"system": "glove-cosine", "seed": 9}"#).unwrap();
        assert_eq!(config.system, System::GloveCosine);
        assert_eq!(config.glove_config().seed, 9);
        assert_eq!(config.glove.epochs, 30);
        assert_eq!(config.rule.epsilon, 0.0005);
    }

    #[test]
    fn output_stem_marks_ablation() {
        let mut config = RunConfig::default();
        assert_eq!(config.output_stem(), "word2vec-cosine.dev");
        config.rule = config.rule.without_replacement();
        assert_eq!(config.output_stem(), "word2vec-cosine-noreplace.dev");
    }
}

//! Tokenization, vocabulary construction and co-occurrence counting.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Byte ranges of the maximal alphanumeric runs in `text`.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        match (ch.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Lowercased maximal runs of alphanumeric characters, in order.
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|(s, e)| text[s..e].to_lowercase())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    token_to_index: HashMap<String, usize>,
    index_to_token: Vec<String>,
    frequency: Vec<u64>,
}

impl Vocabulary {
    /// Builds a vocabulary from `(token, count)` pairs already in index order.
    pub fn from_counts(entries: Vec<(String, u64)>) -> Result<Self> {
        let mut token_to_index = HashMap::with_capacity(entries.len());
        let mut index_to_token = Vec::with_capacity(entries.len());
        let mut frequency = Vec::with_capacity(entries.len());
        for (i, (token, count)) in entries.into_iter().enumerate() {
            if token_to_index.insert(token.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate vocabulary token `{token}`"
                )));
            }
            index_to_token.push(token);
            frequency.push(count);
        }
        Ok(Vocabulary {
            token_to_index,
            index_to_token,
            frequency,
        })
    }

    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_token.is_empty()
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.index_to_token.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.index_to_token
    }

    pub fn frequency(&self, index: usize) -> u64 {
        self.frequency[index]
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequency
    }

    /// Maps a token sequence to indices, `None` for out-of-vocabulary tokens.
    pub fn encode<'a, I, S>(&'a self, tokens: I) -> impl Iterator<Item = Option<usize>> + 'a
    where
        I: IntoIterator<Item = S> + 'a,
        S: AsRef<str>,
    {
        tokens.into_iter().map(move |t| self.index(t.as_ref()))
    }

    /// One `token<TAB>frequency` line per token in index order.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (token, freq) in self.index_to_token.iter().zip(&self.frequency) {
            writeln!(out, "{token}\t{freq}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (token, freq) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected `token<TAB>frequency`".into()))?;
            let freq = freq
                .trim()
                .parse::<u64>()
                .map_err(|e| parse_err(e.to_string()))?;
            entries.push((token.to_owned(), freq));
        }
        Vocabulary::from_counts(entries)
    }
}

/// Keeps tokens with frequency >= `min_count`, indexed by descending
/// frequency and then lexicographically.
pub fn build_vocab<S: AsRef<str>>(corpus: &[Vec<S>], min_count: u64) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::InvalidArgument("min_count must be >= 1".into()));
    }
    if corpus.iter().all(Vec::is_empty) {
        return Err(Error::EmptyCorpus);
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for sentence in corpus {
        for token in sentence {
            *counts.entry(token.as_ref()).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(t, c)| (t.to_owned(), c))
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_counts(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Each pair at token distance `d` contributes `1/d`.
    #[default]
    InverseDistance,
    Uniform,
}

/// Symmetric sparse co-occurrence weights, stored once per unordered pair
/// with the smaller index first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CooccurrenceTable {
    entries: BTreeMap<(usize, usize), f64>,
}

impl CooccurrenceTable {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Unordered entries `(i, j, X_ij)` with `i <= j`, in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &x)| (i, j, x))
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Builds a table directly from unordered entries; duplicate pairs add up.
    pub fn from_entries(entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut table = CooccurrenceTable::default();
        for (i, j, x) in entries {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::NonPositiveCooccurrence(x));
            }
            let key = if i <= j { (i, j) } else { (j, i) };
            *table.entries.entry(key).or_insert(0.0) += x;
        }
        Ok(table)
    }
}

/// Accumulates exact integer pair counts per token distance, so that shards
/// counted separately and merged give the same table as one pass.
#[derive(Debug, Clone, Default)]
pub struct CooccurrenceCounter {
    window: usize,
    counts: BTreeMap<(usize, usize, usize), u64>,
}

impl CooccurrenceCounter {
    pub fn new(window: usize) -> Self {
        CooccurrenceCounter {
            window,
            counts: BTreeMap::new(),
        }
    }

    /// Distances are measured in positions of the original sentence;
    /// out-of-vocabulary tokens contribute no pairs.
    pub fn add_sentence<S: AsRef<str>>(&mut self, sentence: &[S], vocab: &Vocabulary) {
        let ids: Vec<Option<usize>> = vocab.encode(sentence.iter()).collect();
        for (p, left) in ids.iter().enumerate() {
            let Some(left) = *left else { continue };
            let end = (p + self.window).min(ids.len() - 1);
            for (q, right) in ids.iter().enumerate().take(end + 1).skip(p + 1) {
                let Some(right) = *right else { continue };
                let (a, b) = if left <= right { (left, right) } else { (right, left) };
                *self.counts.entry((a, b, q - p)).or_insert(0) += 1;
            }
        }
    }

    pub fn merge(&mut self, other: CooccurrenceCounter) {
        for (key, n) in other.counts {
            *self.counts.entry(key).or_insert(0) += n;
        }
    }

    pub fn finish(self, weighting: Weighting) -> CooccurrenceTable {
        let mut entries = BTreeMap::new();
        // keys iterate as (i, j, d) ascending, so each pair sums its
        // distances in a fixed order
        for ((i, j, d), n) in self.counts {
            let w = match weighting {
                Weighting::InverseDistance => n as f64 / d as f64,
                Weighting::Uniform => n as f64,
            };
            *entries.entry((i, j)).or_insert(0.0) += w;
        }
        CooccurrenceTable { entries }
    }
}

pub fn count_cooccurrence<S: AsRef<str>>(
    corpus: &[Vec<S>],
    vocab: &Vocabulary,
    window: usize,
    weighting: Weighting,
) -> Result<CooccurrenceTable> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be >= 1".into()));
    }
    let mut counter = CooccurrenceCounter::new(window);
    for sentence in corpus {
        counter.add_sentence(sentence, vocab);
    }
    Ok(counter.finish(weighting))
}

/// Counts `corpus` split into `shards` contiguous parts on worker threads.
/// The result is identical to [`count_cooccurrence`].
pub fn count_cooccurrence_parallel<S: AsRef<str> + Sync>(
    corpus: &[Vec<S>],
    vocab: &Vocabulary,
    window: usize,
    weighting: Weighting,
    shards: usize,
) -> Result<CooccurrenceTable> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be >= 1".into()));
    }
    let shards = shards.max(1);
    let chunk = corpus.len().div_ceil(shards).max(1);
    let partials: Vec<CooccurrenceCounter> = std::thread::scope(|scope| {
        let handles: Vec<_> = corpus
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    let mut counter = CooccurrenceCounter::new(window);
                    for sentence in part {
                        counter.add_sentence(sentence, vocab);
                    }
                    counter
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("counting thread panicked"))
            .collect()
    });
    let mut total = CooccurrenceCounter::new(window);
    for partial in partials {
        total.merge(partial);
    }
    Ok(total.finish(weighting))
}

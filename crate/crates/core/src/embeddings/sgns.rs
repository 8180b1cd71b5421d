use std::sync::atomic::{AtomicUsize, Ordering};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::shared::SharedParams;
use super::{check_dim, dot, EmbeddingMatrix, EmbeddingSource, TrainConfig, Trained};
use crate::error::{Error, Result};
use crate::textproc::Vocabulary;

/// Loss of one skip-gram pair with its negatives, and the gradient with
/// respect to every input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsTerm {
    pub loss: f64,
    pub grad_center: Vec<f64>,
    pub grad_context: Vec<f64>,
    pub grad_negatives: Vec<Vec<f64>>,
}

/// `log(sigmoid(x))` without overflow for large |x|.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Returns the loss and, per target, the coefficient `g` such that
/// `dL/d target = g * center` and `dL/d center = sum g * target`.
/// `targets[0]` is the positive context, the rest are negatives.
fn sgns_coefficients(center: &[f64], targets: &[&[f64]], coeffs: &mut Vec<f64>) -> f64 {
    coeffs.clear();
    let mut loss = 0.0;
    for (k, target) in targets.iter().enumerate() {
        let score = dot(center, target);
        if k == 0 {
            loss -= log_sigmoid(score);
            coeffs.push(sigmoid(score) - 1.0);
        } else {
            loss -= log_sigmoid(-score);
            coeffs.push(sigmoid(score));
        }
    }
    loss
}

/// `L = -log s(c.o) - sum_k log s(-c.n_k)` with analytic gradients.
pub fn sgns_pair_objective<N: AsRef<[f64]>>(
    center: &[f64],
    context: &[f64],
    negatives: &[N],
) -> Result<SgnsTerm> {
    let dim = center.len();
    check_dim(dim, context)?;
    for n in negatives {
        check_dim(dim, n.as_ref())?;
    }
    let mut targets: Vec<&[f64]> = Vec::with_capacity(negatives.len() + 1);
    targets.push(context);
    targets.extend(negatives.iter().map(AsRef::as_ref));
    let mut coeffs = Vec::new();
    let loss = sgns_coefficients(center, &targets, &mut coeffs);

    let mut grad_center = vec![0.0; dim];
    for (g, target) in coeffs.iter().zip(&targets) {
        for (acc, t) in grad_center.iter_mut().zip(target.iter()) {
            *acc += g * t;
        }
    }
    let scaled = |g: f64| center.iter().map(|c| g * c).collect::<Vec<_>>();
    Ok(SgnsTerm {
        loss,
        grad_center,
        grad_context: scaled(coeffs[0]),
        grad_negatives: coeffs[1..].iter().map(|&g| scaled(g)).collect(),
    })
}

struct SgnsState<'a> {
    input: SharedParams,
    output: SharedParams,
    noise: WeightedIndex<f64>,
    config: &'a TrainConfig,
    progress: AtomicUsize,
    total_work: usize,
}

impl SgnsState<'_> {
    fn learning_rate(&self) -> f64 {
        let done = self.progress.load(Ordering::Relaxed) as f64;
        let frac = 1.0 - done / (self.total_work as f64 + 1.0);
        self.config.learning_rate * frac.max(1e-4)
    }

    /// Runs one pass over `sentences`; returns `(loss sum, pair count)`.
    fn run_shard(&self, sentences: &[Vec<usize>], rng: &mut ChaCha8Rng) -> (f64, usize) {
        let dim = self.config.dim;
        let window = self.config.window;
        let mut center = vec![0.0; dim];
        let mut rows = vec![0.0; dim * (self.config.negatives + 1)];
        let mut ids = Vec::with_capacity(self.config.negatives + 1);
        let mut coeffs = Vec::new();
        let mut grad_center = vec![0.0; dim];
        let mut loss_sum = 0.0;
        let mut pairs = 0;

        for sentence in sentences {
            for (p, &word) in sentence.iter().enumerate() {
                let lr = self.learning_rate();
                let lo = p.saturating_sub(window);
                let hi = (p + window).min(sentence.len() - 1);
                for q in (lo..=hi).filter(|&q| q != p) {
                    let context = sentence[q];
                    ids.clear();
                    ids.push(context);
                    for _ in 0..self.config.negatives {
                        let n = self.noise.sample(rng);
                        if n != context {
                            ids.push(n);
                        }
                    }
                    self.input.read_into(word * dim, &mut center);
                    for (k, &id) in ids.iter().enumerate() {
                        self.output.read_into(id * dim, &mut rows[k * dim..(k + 1) * dim]);
                    }
                    let targets: Vec<&[f64]> = rows.chunks(dim).take(ids.len()).collect();
                    loss_sum += sgns_coefficients(&center, &targets, &mut coeffs);
                    pairs += 1;

                    grad_center.iter_mut().for_each(|g| *g = 0.0);
                    for (g, target) in coeffs.iter().zip(&targets) {
                        for (acc, t) in grad_center.iter_mut().zip(target.iter()) {
                            *acc += g * t;
                        }
                    }
                    for (&g, &id) in coeffs.iter().zip(&ids) {
                        self.output.add_scaled(id * dim, -lr * g, &center);
                    }
                    self.input.add_scaled(word * dim, -lr, &grad_center);
                }
                self.progress.fetch_add(1, Ordering::Relaxed);
            }
        }
        (loss_sum, pairs)
    }
}

/// Skip-gram with negative sampling over a tokenized corpus.
///
/// Every `(center, context)` pair within `config.window` is visited once per
/// epoch. Negatives come from the unigram distribution raised to 3/4; a
/// negative equal to the context word is dropped. The learning rate decays
/// linearly over the run. Out-of-vocabulary tokens are removed before the
/// window is applied.
pub fn train_word2vec<S: AsRef<str>>(
    corpus: &[Vec<S>],
    vocab: &Vocabulary,
    config: &TrainConfig,
) -> Result<Trained> {
    config.validate()?;
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary { min_count: 1 });
    }
    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| vocab.encode(s.iter()).flatten().collect::<Vec<_>>())
        .filter(|s: &Vec<usize>| s.len() > 1)
        .collect();
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let half = 0.5 / dim as f64;
    let input: Vec<f64> = (0..vocab.len() * dim)
        .map(|_| rng.gen_range(-half..half))
        .collect();
    let noise = WeightedIndex::new(vocab.frequencies().iter().map(|&f| (f as f64).powf(0.75)))
        .map_err(|e| Error::InvalidArgument(format!("noise distribution: {e}")))?;
    let total_tokens: usize = sentences.iter().map(Vec::len).sum();

    let state = SgnsState {
        input: SharedParams::from_vec(input),
        output: SharedParams::from_vec(vec![0.0; vocab.len() * dim]),
        noise,
        config,
        progress: AtomicUsize::new(0),
        total_work: total_tokens * config.epochs,
    };

    let threads = config.threads.min(sentences.len());
    let shard_len = sentences.len().div_ceil(threads);
    let mut rngs: Vec<ChaCha8Rng> = (0..threads)
        .map(|t| {
            let mut r = ChaCha8Rng::seed_from_u64(config.seed);
            r.set_stream(t as u64 + 1);
            r
        })
        .collect();

    let mut epoch_loss = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let (loss, pairs) = if threads == 1 {
            state.run_shard(&sentences, &mut rngs[0])
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = sentences
                    .chunks(shard_len)
                    .zip(rngs.iter_mut())
                    .map(|(shard, rng)| {
                        let state = &state;
                        scope.spawn(move || state.run_shard(shard, rng))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("word2vec worker panicked"))
                    .fold((0.0, 0), |acc, x| (acc.0 + x.0, acc.1 + x.1))
            })
        };
        epoch_loss.push(loss / pairs.max(1) as f64);
    }

    let matrix = EmbeddingMatrix::new(dim, state.input.into_vec(), EmbeddingSource::Word2vec)?;
    Ok(Trained { matrix, epoch_loss })
}

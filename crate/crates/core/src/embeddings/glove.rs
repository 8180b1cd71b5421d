use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::shared::SharedParams;
use super::{check_dim, dot, EmbeddingMatrix, EmbeddingSource, TrainConfig, Trained};
use crate::error::{Error, Result};
use crate::textproc::CooccurrenceTable;

#[derive(Debug, Clone, PartialEq)]
pub struct GloveTerm {
    pub loss: f64,
    pub grad_word: Vec<f64>,
    pub grad_context: Vec<f64>,
    pub grad_word_bias: f64,
    pub grad_context_bias: f64,
}

/// `f(x) = (x / x_max)^alpha`, capped at 1.
pub fn glove_weight(x: f64, x_max: f64, alpha: f64) -> f64 {
    if x >= x_max {
        1.0
    } else {
        (x / x_max).powf(alpha)
    }
}

/// Weight and residual `w.w~ + b + b~ - log x` of one entry.
fn glove_residual(
    word: &[f64],
    context: &[f64],
    word_bias: f64,
    context_bias: f64,
    x: f64,
    x_max: f64,
    alpha: f64,
) -> (f64, f64) {
    let diff = dot(word, context) + word_bias + context_bias - x.ln();
    (glove_weight(x, x_max, alpha), diff)
}

/// One GloVe term `f(X_ij) (w_i.w~_j + b_i + b~_j - log X_ij)^2` and its
/// gradients.
pub fn glove_term_objective(
    word: &[f64],
    context: &[f64],
    word_bias: f64,
    context_bias: f64,
    x: f64,
    x_max: f64,
    alpha: f64,
) -> Result<GloveTerm> {
    check_dim(word.len(), context)?;
    if x.is_nan() || x <= 0.0 {
        return Err(Error::NonPositiveCooccurrence(x));
    }
    let (f, diff) = glove_residual(word, context, word_bias, context_bias, x, x_max, alpha);
    let g = 2.0 * f * diff;
    Ok(GloveTerm {
        loss: f * diff * diff,
        grad_word: context.iter().map(|c| g * c).collect(),
        grad_context: word.iter().map(|w| g * w).collect(),
        grad_word_bias: g,
        grad_context_bias: g,
    })
}

/// Word and context vectors plus biases; rows `0..n` of `vectors` are word
/// vectors and rows `n..2n` context vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GloveModel {
    pub dim: usize,
    pub vocab_size: usize,
    pub vectors: Vec<f64>,
    pub biases: Vec<f64>,
}

impl GloveModel {
    /// Uniform initialization in `[-0.5/dim, 0.5/dim)`.
    pub fn init(vocab_size: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = 0.5 / dim as f64;
        let vectors = (0..2 * vocab_size * dim)
            .map(|_| rng.gen_range(-half..half))
            .collect();
        let biases = (0..2 * vocab_size)
            .map(|_| rng.gen_range(-half..half))
            .collect();
        GloveModel {
            dim,
            vocab_size,
            vectors,
            biases,
        }
    }

    pub fn word(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn context(&self, j: usize) -> &[f64] {
        let row = self.vocab_size + j;
        &self.vectors[row * self.dim..(row + 1) * self.dim]
    }

    pub fn word_bias(&self, i: usize) -> f64 {
        self.biases[i]
    }

    pub fn context_bias(&self, j: usize) -> f64 {
        self.biases[self.vocab_size + j]
    }

    /// Total weighted loss over both orientations of every off-diagonal
    /// entry (diagonal entries once), i.e. over the full symmetric matrix.
    pub fn objective(&self, table: &CooccurrenceTable, x_max: f64, alpha: f64) -> f64 {
        let term = |i: usize, j: usize, x: f64| {
            let (f, diff) = glove_residual(
                self.word(i),
                self.context(j),
                self.word_bias(i),
                self.context_bias(j),
                x,
                x_max,
                alpha,
            );
            f * diff * diff
        };
        table
            .iter()
            .map(|(i, j, x)| {
                if i == j {
                    term(i, i, x)
                } else {
                    term(i, j, x) + term(j, i, x)
                }
            })
            .sum()
    }

    /// Final embedding `w_i + w~_i` per word.
    pub fn word_vectors(&self) -> Result<EmbeddingMatrix> {
        let values = (0..self.vocab_size)
            .flat_map(|i| self.word(i).iter().zip(self.context(i)).map(|(w, c)| w + c))
            .collect();
        EmbeddingMatrix::new(self.dim, values, EmbeddingSource::Glove)
    }
}

fn directed_entries(table: &CooccurrenceTable) -> Vec<(usize, usize, f64)> {
    let mut entries = Vec::with_capacity(table.len() * 2);
    for (i, j, x) in table.iter() {
        entries.push((i, j, x));
        if i != j {
            entries.push((j, i, x));
        }
    }
    entries
}

struct GloveState<'a> {
    vectors: SharedParams,
    biases: SharedParams,
    vector_sq: SharedParams,
    bias_sq: SharedParams,
    vocab_size: usize,
    config: &'a TrainConfig,
}

impl GloveState<'_> {
    fn run_shard(&self, entries: &[(usize, usize, f64)]) -> f64 {
        let dim = self.config.dim;
        let lr = self.config.learning_rate;
        let mut w = vec![0.0; dim];
        let mut c = vec![0.0; dim];
        let mut w_sq = vec![0.0; dim];
        let mut c_sq = vec![0.0; dim];
        let mut loss = 0.0;
        for &(i, j, x) in entries {
            let wi = i * dim;
            let cj = (self.vocab_size + j) * dim;
            let bj = self.vocab_size + j;
            self.vectors.read_into(wi, &mut w);
            self.vectors.read_into(cj, &mut c);
            let (f, diff) = glove_residual(
                &w,
                &c,
                self.biases.get(i),
                self.biases.get(bj),
                x,
                self.config.x_max,
                self.config.alpha,
            );
            if !diff.is_finite() {
                continue;
            }
            loss += f * diff * diff;
            let g = 2.0 * f * diff;

            // AdaGrad: step with the accumulated squares, then accumulate
            self.vector_sq.read_into(wi, &mut w_sq);
            self.vector_sq.read_into(cj, &mut c_sq);
            for k in 0..dim {
                let gw = g * c[k];
                let gc = g * w[k];
                self.vectors.set(wi + k, w[k] - lr * gw / w_sq[k].sqrt());
                self.vectors.set(cj + k, c[k] - lr * gc / c_sq[k].sqrt());
                self.vector_sq.set(wi + k, w_sq[k] + gw * gw);
                self.vector_sq.set(cj + k, c_sq[k] + gc * gc);
            }
            for b in [i, bj] {
                let sq = self.bias_sq.get(b);
                self.biases.set(b, self.biases.get(b) - lr * g / sq.sqrt());
                self.bias_sq.set(b, sq + g * g);
            }
        }
        loss
    }
}

/// Trains `model` in place with AdaGrad over shuffled entries; returns the
/// mean loss accumulated during each epoch.
pub fn fit_glove(
    model: &mut GloveModel,
    table: &CooccurrenceTable,
    config: &TrainConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if table.is_empty() {
        return Err(Error::EmptyCooccurrence);
    }
    if config.dim != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            found: config.dim,
        });
    }
    if let Some((i, j, _)) = table
        .iter()
        .find(|&(i, j, _)| i.max(j) >= model.vocab_size)
    {
        return Err(Error::InvalidArgument(format!(
            "co-occurrence entry ({i}, {j}) outside vocabulary of {}",
            model.vocab_size
        )));
    }

    let mut entries = directed_entries(table);
    let state = GloveState {
        vectors: SharedParams::from_vec(std::mem::take(&mut model.vectors)),
        biases: SharedParams::from_vec(std::mem::take(&mut model.biases)),
        vector_sq: SharedParams::from_vec(vec![1.0; 2 * model.vocab_size * model.dim]),
        bias_sq: SharedParams::from_vec(vec![1.0; 2 * model.vocab_size]),
        vocab_size: model.vocab_size,
        config,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let threads = config.threads.min(entries.len());
    let shard_len = entries.len().div_ceil(threads);

    let mut epoch_loss = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        entries.shuffle(&mut rng);
        let loss = if threads == 1 {
            state.run_shard(&entries)
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = entries
                    .chunks(shard_len)
                    .map(|shard| {
                        let state = &state;
                        scope.spawn(move || state.run_shard(shard))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("glove worker panicked"))
                    .sum()
            })
        };
        epoch_loss.push(loss / entries.len() as f64);
    }

    model.vectors = state.vectors.into_vec();
    model.biases = state.biases.into_vec();
    Ok(epoch_loss)
}

/// GloVe with AdaGrad; the returned matrix holds `w_i + w~_i`.
pub fn train_glove(
    table: &CooccurrenceTable,
    vocab_size: usize,
    config: &TrainConfig,
) -> Result<Trained> {
    config.validate()?;
    let mut model = GloveModel::init(vocab_size, config.dim, config.seed);
    let epoch_loss = fit_glove(&mut model, table, config)?;
    Ok(Trained {
        matrix: model.word_vectors()?,
        epoch_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_has_zero_loss_and_gradient() {
        let w = [0.5, -0.25];
        let c = [1.0, 2.0];
        // w.c = 0; 0 + 0.3 + 0.2 = log x
        let x = 0.5f64.exp();
        let term = glove_term_objective(&w, &c, 0.3, 0.2, x, 100.0, 0.75).unwrap();
        assert!(term.loss.abs() < 1e-24);
        assert!(term.grad_word.iter().all(|g| g.abs() < 1e-12));
        assert!(term.grad_context_bias.abs() < 1e-12);
    }

    #[test]
    fn weight_caps_at_one() {
        assert_eq!(glove_weight(100.0, 100.0, 0.75), 1.0);
        assert_eq!(glove_weight(1e6, 100.0, 0.75), 1.0);
        assert!(glove_weight(10.0, 100.0, 0.75) < 1.0);
    }

    #[test]
    fn rejects_non_positive_counts() {
        assert!(matches!(
            glove_term_objective(&[0.0], &[0.0], 0.0, 0.0, 0.0, 100.0, 0.75),
            Err(Error::NonPositiveCooccurrence(_))
        ));
        assert!(glove_term_objective(&[0.0], &[0.0, 1.0], 0.0, 0.0, 1.0, 100.0, 0.75).is_err());
    }

    #[test]
    fn swapping_roles_keeps_loss() {
        let w = [0.1, -0.3, 0.2];
        let c = [0.4, 0.05, -0.2];
        let a = glove_term_objective(&w, &c, 0.1, -0.2, 3.0, 100.0, 0.75).unwrap();
        let b = glove_term_objective(&c, &w, -0.2, 0.1, 3.0, 100.0, 0.75).unwrap();
        assert_eq!(a.loss, b.loss);
    }

    fn small_table() -> CooccurrenceTable {
        CooccurrenceTable::from_entries([
            (0, 1, 4.0),
            (0, 2, 1.0),
            (1, 2, 2.5),
            (2, 2, 0.5),
            (1, 3, 7.0),
        ])
        .unwrap()
    }

    #[test]
    fn training_is_reproducible_and_descends() {
        let table = small_table();
        let config = TrainConfig {
            seed: 3,
            ..TrainConfig::glove()
        };
        let a = train_glove(&table, 4, &config).unwrap();
        let b = train_glove(&table, 4, &config).unwrap();
        assert_eq!(a.matrix.to_bits(), b.matrix.to_bits());
        assert_eq!(a.epoch_loss.len(), 30);

        let mut model = GloveModel::init(4, 5, 3);
        let before = model.objective(&table, 100.0, 0.75);
        fit_glove(&mut model, &table, &config).unwrap();
        assert!(model.objective(&table, 100.0, 0.75) < before);
    }

    #[test]
    fn empty_table_is_an_error() {
        let table = CooccurrenceTable::default();
        assert!(matches!(
            train_glove(&table, 3, &TrainConfig::glove()),
            Err(Error::EmptyCooccurrence)
        ));
    }
}

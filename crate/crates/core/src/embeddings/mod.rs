//! Word embedding trainers (skip-gram with negative sampling, GloVe),
//! sentence pooling, and the text embedding file format.

mod glove;
mod shared;
mod sgns;
mod vectors;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use glove::{fit_glove, glove_term_objective, glove_weight, train_glove, GloveModel, GloveTerm};
pub use sgns::{sgns_pair_objective, train_word2vec, SgnsTerm};
pub use vectors::{load_external_embeddings, pool_sentence, SentenceVector, VectorTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSource {
    Word2vec,
    Glove,
    External,
}

/// Row-major `rows x dim` matrix of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    values: Vec<f64>,
    source: EmbeddingSource,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, values: Vec<f64>, source: EmbeddingSource) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} values do not fill rows of width {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("embedding contains non-finite values".into()));
        }
        Ok(EmbeddingMatrix {
            dim,
            values,
            source,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.values[index * self.dim..(index + 1) * self.dim]
    }

    pub fn source(&self) -> EmbeddingSource {
        self.source
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Bit pattern of every entry, for reproducibility checks.
    pub fn to_bits(&self) -> Vec<u64> {
        self.values.iter().map(|v| v.to_bits()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Negative samples per positive pair (word2vec only).
    pub negatives: usize,
    /// Weighting cap (GloVe only).
    pub x_max: f64,
    /// Weighting exponent (GloVe only).
    pub alpha: f64,
    pub seed: u64,
    /// 1 is bit-reproducible; more threads share parameters without locking
    /// and are not.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::word2vec()
    }
}

impl TrainConfig {
    pub fn word2vec() -> Self {
        TrainConfig {
            dim: 5,
            window: 7,
            epochs: 15,
            learning_rate: 0.025,
            negatives: 5,
            x_max: 100.0,
            alpha: 0.75,
            seed: 1,
            threads: 1,
        }
    }

    pub fn glove() -> Self {
        TrainConfig {
            window: 10,
            epochs: 30,
            learning_rate: 0.05,
            ..TrainConfig::word2vec()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("train config: {what}")));
        if self.dim == 0 || self.window == 0 || self.epochs == 0 || self.negatives == 0 {
            return bad("dim, window, epochs and negatives must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0, 1]");
        }
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return bad("x_max must be > 0");
        }
        if self.threads == 0 {
            return bad("threads must be >= 1");
        }
        Ok(())
    }
}

/// A trained matrix with the mean training loss of every epoch.
#[derive(Debug, Clone)]
pub struct Trained {
    pub matrix: EmbeddingMatrix,
    pub epoch_loss: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_dim(expected: usize, v: &[f64]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_hyperparameters() {
        let w2v = TrainConfig::word2vec();
        assert_eq!((w2v.dim, w2v.window), (5, 7));
        let glove = TrainConfig::glove();
        assert_eq!((glove.dim, glove.window, glove.epochs), (5, 10, 30));
        assert_eq!(glove.learning_rate, 0.05);
        assert_eq!((glove.x_max, glove.alpha), (100.0, 0.75));
    }

    #[test]
    fn config_validation() {
        let mut c = TrainConfig::glove();
        c.alpha = 1.5;
        assert!(c.validate().is_err());
        c.alpha = 1.0;
        c.validate().unwrap();
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn matrix_rejects_ragged_or_nan() {
        assert!(EmbeddingMatrix::new(3, vec![0.0; 4], EmbeddingSource::Glove).is_err());
        assert!(EmbeddingMatrix::new(2, vec![0.0, f64::NAN], EmbeddingSource::Glove).is_err());
        let m = EmbeddingMatrix::new(2, vec![1.0, 2.0, 3.0, 4.0], EmbeddingSource::Glove).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.row(1), &[3.0, 4.0]);
    }
}

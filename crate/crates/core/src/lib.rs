//! Unsupervised answer selection for legal multiple-choice questions.
//!
//! The pipeline loads candidate-level question/answer data, summarizes each
//! explanation in two segment-wise passes, embeds questions, answers and
//! summaries (trained word2vec or GloVe vectors pooled per text, or
//! externally computed transformer vectors), scores every candidate against
//! its question and the summary, and picks one answer per question with a
//! runner-up replacement rule. Accuracy, macro-F1 and the Q/S breakdown of
//! right and wrong predictions are reported at candidate level.

pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod labeling;
pub mod scoring;
pub mod summarizer;
pub mod textproc;

pub use error::{Error, Result};

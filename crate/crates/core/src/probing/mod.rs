//! Probing mathematics for both experiments: animacy confidence, entropy
//! and log-odds over mask distributions, Welch's t-test, embedding-only
//! tuning of novel tokens, accuracy evaluation and per-cell summaries.

mod eval;
mod finetune;
mod metrics;
mod summary;
mod welch;

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub use eval::{average_runs, column_order, eval_accuracy, pool_verbs, select_verb, verdict, CellKey, RunTable, Tally};
pub use finetune::{
    add_novel_tokens, tune_embeddings, EarlyStop, FinetuneConfig, Observation, TuneStatus, TuneTrace, NOVEL_INIT_STD,
};
pub use metrics::{animacy_confidence, entropy, log_odds, Aconf, MASS_FLOOR, NORM_TOL};
pub use summary::{aconf_records, summarize_exp1, AconfRecord, CellReport};
pub use welch::{inc_beta, student_t_two_sided, welch_t, Welch};

use crate::backend::BackendError;
use crate::mlm::{MlmError, VocabError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("tokens missing from the distribution: {0:?}")]
    MissingTokens(Vec<String>),
    #[error("distribution sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("restricted distribution carries no entropy")]
    NoEntropy,
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("tuning sentence {sentence} has {count} novel tokens, expected 1")]
    NovelCount { sentence: usize, count: usize },
    #[error("novel token '{0}' is not in the vocabulary")]
    UnknownNovel(String),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Mlm(#[from] MlmError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

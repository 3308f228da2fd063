//! The toy masked language model: vocabulary, parameters, forward and
//! backward passes, training, and masked-position inference.

mod config;
mod gradcheck;
mod model;
mod params;
mod scalar;
mod train;
mod vocab;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{ConfigError, ModelConfig};
pub use gradcheck::{grad_check, loss_and_grad, GradCheck};
pub use model::{log_softmax, Model, Trace};
pub use params::{tensor_shapes, LayerParams, Params, INIT_STD};
pub use scalar::Scalar;
pub use train::{corpus_hash, mask_sentence, train_mlm, Init, MaskedExample, TrainConfig};
pub use vocab::{tokenize, Vocab, VocabError, MASK_ID, PAD_ID, RESERVED, UNK_ID};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlmError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("vocabulary has {vocab} tokens but the config expects {config}")]
    VocabSize { vocab: usize, config: usize },
    #[error("parameter shapes do not match the config")]
    Shape,
    #[error("sequence of length {len} exceeds max_len {max_len}")]
    TooLong { len: usize, max_len: usize },
    #[error("position {0} is out of range")]
    OutOfRange(usize),
    #[error("position {0} does not hold the mask token")]
    NotMasked(usize),
    #[error("token id {0} is outside the vocabulary")]
    BadToken(u32),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("loss became {loss} at step {step} (lr {lr}, last finite loss {last})")]
    NonFinite { step: usize, loss: f64, lr: f32, last: f64 },
    #[error("epsilon must be positive")]
    Epsilon,
    #[error("{0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub steps: u64,
    pub seed: u64,
    pub corpus_hash: u64,
}

/// Config, float32 parameters, vocabulary and training metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: Params<f32>,
    pub vocab: Vocab,
    pub meta: TrainMeta,
}

impl Checkpoint {
    /// Freshly initialized model over `vocab`.
    pub fn init(config: ModelConfig, vocab: Vocab) -> Result<Self, MlmError> {
        let config = ModelConfig { vocab_size: vocab.len(), ..config };
        config.validate()?;
        let params = Params::init(&config);
        Ok(Checkpoint { config, params, vocab, meta: TrainMeta::default() })
    }

    /// Shape and vocabulary consistency.
    pub fn validate(&self) -> Result<(), MlmError> {
        self.config.validate()?;
        if self.vocab.len() != self.config.vocab_size {
            return Err(MlmError::VocabSize { vocab: self.vocab.len(), config: self.config.vocab_size });
        }
        let shapes = tensor_shapes(&self.config);
        let named = self.params.named();
        if named.len() != shapes.len()
            || named.iter().zip(&shapes).any(|((_, t), (_, s))| t.len() != s.iter().product())
        {
            return Err(MlmError::Shape);
        }
        Ok(())
    }

    pub fn model(&self) -> Model<'_, f32> {
        Model::new(&self.config, &self.params)
    }

    fn check_tokens(&self, tokens: &[u32]) -> Result<(), MlmError> {
        if tokens.len() > self.config.max_len {
            return Err(MlmError::TooLong { len: tokens.len(), max_len: self.config.max_len });
        }
        match tokens.iter().find(|&&t| t as usize >= self.vocab.len()) {
            Some(&t) => Err(MlmError::BadToken(t)),
            None => Ok(()),
        }
    }

    /// Full-vocabulary log-probabilities at each position, indexed by id.
    pub fn log_probs_at(&self, tokens: &[u32], positions: &[usize]) -> Result<Vec<Vec<f64>>, MlmError> {
        self.check_tokens(tokens)?;
        for &p in positions {
            if p >= tokens.len() {
                return Err(MlmError::OutOfRange(p));
            }
        }
        let model = self.model();
        let trace = model.forward(tokens, None);
        Ok(positions.iter().map(|&p| log_softmax(&model.logits(&trace, p))).collect())
    }
}

/// Prediction at one masked position.
///
/// A complete distribution carries a log-probability for every vocabulary
/// token; an incomplete one carries only queried tokens plus the entropy and
/// top-K list computed where the full distribution was available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskDistribution {
    pub position: usize,
    pub log_probs: BTreeMap<String, f64>,
    pub entropy: Option<f64>,
    pub top_k: Vec<(String, f64)>,
    pub complete: bool,
}

impl MaskDistribution {
    /// Complete distribution from id-indexed log-probabilities.
    pub fn from_log_probs(position: usize, vocab: &Vocab, lp: &[f64]) -> Self {
        let log_probs = vocab.tokens().iter().cloned().zip(lp.iter().copied()).collect();
        MaskDistribution { position, log_probs, entropy: Some(entropy_of(lp)), top_k: Vec::new(), complete: true }
    }

    pub fn log_prob(&self, token: &str) -> Option<f64> {
        self.log_probs.get(token).copied()
    }

    /// The `k` most probable tokens, ties broken by token.
    pub fn top(&self, k: usize) -> Vec<(String, f64)> {
        if !self.complete {
            return self.top_k.iter().take(k).cloned().collect();
        }
        let mut all: Vec<(String, f64)> = self.log_probs.iter().map(|(t, &l)| (t.clone(), l)).collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    /// Reduce to the queried tokens, keeping entropy and a top-K list.
    pub fn restrict<S: AsRef<str>>(&self, query: &[S], k: usize) -> Self {
        let log_probs = query
            .iter()
            .filter_map(|q| self.log_probs.get_key_value(q.as_ref()).map(|(t, &l)| (t.clone(), l)))
            .collect();
        MaskDistribution {
            position: self.position,
            log_probs,
            entropy: self.entropy,
            top_k: self.top(k),
            complete: false,
        }
    }
}

/// −Σ p ln p over id-indexed log-probabilities, with 0 ln 0 = 0.
pub(crate) fn entropy_of(lp: &[f64]) -> f64 {
    let h: f64 = lp.iter().filter(|l| l.is_finite()).map(|&l| -libm::exp(l) * l).sum();
    h.max(0.0)
}

/// One complete distribution per requested position. Positions must hold
/// the mask id; dropout is off.
pub fn forward_masked(
    ckpt: &Checkpoint,
    tokens: &[u32],
    positions: &[usize],
) -> Result<Vec<MaskDistribution>, MlmError> {
    ckpt.check_tokens(tokens)?;
    for &p in positions {
        match tokens.get(p) {
            None => return Err(MlmError::OutOfRange(p)),
            Some(&t) if t != MASK_ID => return Err(MlmError::NotMasked(p)),
            _ => {}
        }
    }
    let lps = ckpt.log_probs_at(tokens, positions)?;
    Ok(positions.iter().zip(lps).map(|(&p, lp)| MaskDistribution::from_log_probs(p, &ckpt.vocab, &lp)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paradigm::closed_vocabulary;

    fn fresh() -> Checkpoint {
        Checkpoint::init(ModelConfig::default(), Vocab::from_words(closed_vocabulary())).unwrap()
    }

    #[test]
    fn fresh_model_is_near_uniform() {
        let ck = fresh();
        let ids = ck.vocab.tokenize("I gave the [MASK] a ball .");
        let d = &forward_masked(&ck, &ids, &[3]).unwrap()[0];
        let ln_v = libm::log(ck.vocab.len() as f64);
        let h = d.entropy.unwrap();
        assert!((h - ln_v).abs() / ln_v < 0.01, "{h} vs {ln_v}");
        let total: f64 = d.log_probs.values().map(|l| libm::exp(*l)).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn forward_masked_preconditions() {
        let ck = fresh();
        let ids = ck.vocab.tokenize("I gave the [MASK] a ball .");
        assert_eq!(forward_masked(&ck, &ids, &[2]), Err(MlmError::NotMasked(2)));
        assert_eq!(forward_masked(&ck, &ids, &[9]), Err(MlmError::OutOfRange(9)));
        let long = alloc::vec![MASK_ID; 17];
        assert_eq!(forward_masked(&ck, &long, &[0]), Err(MlmError::TooLong { len: 17, max_len: 16 }));
    }

    #[test]
    fn forward_is_deterministic() {
        let ck = fresh();
        let ids = ck.vocab.tokenize("[MASK] gave the dog a [MASK] .");
        assert_eq!(forward_masked(&ck, &ids, &[0, 5]).unwrap(), forward_masked(&ck, &ids, &[0, 5]).unwrap());
    }

    #[test]
    fn tied_embedding_moves_input_and_output() {
        let mut ck = fresh();
        let ids = ck.vocab.tokenize("I gave the [MASK] a ball .");
        let ball = ck.vocab.id("ball").unwrap() as usize;
        let dog = ck.vocab.id("dog").unwrap() as usize;
        let before = ck.log_probs_at(&ids, &[3]).unwrap().remove(0);
        let d = ck.config.d_model;
        for j in 0..d {
            ck.params.token_embedding[ball * d + j] += 0.5;
        }
        let after = ck.log_probs_at(&ids, &[3]).unwrap().remove(0);
        // "ball" appears in the input, so every output moves; its own output
        // logit moves through the shared row as well.
        assert_ne!(before[dog], after[dog]);
        assert_ne!(before[ball] - before[dog], after[ball] - after[dog]);
        // With "ball" absent from the input only the output side can change.
        let ids2 = ck.vocab.tokenize("I gave the [MASK] a dog .");
        let mut ck2 = fresh();
        let b0 = ck2.log_probs_at(&ids2, &[3]).unwrap().remove(0);
        for j in 0..d {
            ck2.params.token_embedding[ball * d + j] += 0.5;
        }
        let b1 = ck2.log_probs_at(&ids2, &[3]).unwrap().remove(0);
        assert_ne!(b0[ball] - b0[dog], b1[ball] - b1[dog]);
        let cat = ck2.vocab.id("wolf").unwrap() as usize;
        assert!(((b0[cat] - b0[dog]) - (b1[cat] - b1[dog])).abs() < 1e-12);
    }

    #[test]
    fn vocabulary_permutation_is_invisible() {
        let ck = fresh();
        let n = ck.vocab.len();
        let d = ck.config.d_model;
        // Reverse the non-reserved ids and move their rows with them.
        let perm: Vec<usize> =
            (0..n).map(|i| if i < RESERVED.len() { i } else { n - 1 - (i - RESERVED.len()) }).collect();
        let tokens: Vec<String> = perm.iter().map(|&i| ck.vocab.tokens()[i].clone()).collect();
        let vocab = Vocab::from_parts(tokens, n).unwrap();
        let mut params = ck.params.clone();
        for (new, &old) in perm.iter().enumerate() {
            params.token_embedding[new * d..(new + 1) * d]
                .copy_from_slice(&ck.params.token_embedding[old * d..(old + 1) * d]);
            params.output_bias[new] = ck.params.output_bias[old];
        }
        let shuffled = Checkpoint { vocab, params, ..ck.clone() };
        let text = "[MASK] taught the student a [MASK] .";
        let a = forward_masked(&ck, &ck.vocab.tokenize(text), &[0, 5]).unwrap();
        let b = forward_masked(&shuffled, &shuffled.vocab.tokenize(text), &[0, 5]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for (t, l) in &x.log_probs {
                assert!((l - y.log_probs[t]).abs() < 1e-9, "{t}");
            }
        }
    }

    #[test]
    fn restrict_keeps_queried_tokens() {
        let ck = fresh();
        let ids = ck.vocab.tokenize("I gave the [MASK] a ball .");
        let d = forward_masked(&ck, &ids, &[3]).unwrap().remove(0);
        let r = d.restrict(&["dog", "book", "nonword"], 3);
        assert!(!r.complete);
        assert_eq!(r.log_probs.len(), 2);
        assert_eq!(r.log_prob("dog"), d.log_prob("dog"));
        assert_eq!(r.top_k, d.top(3));
        assert_eq!(r.entropy, d.entropy);
    }
}

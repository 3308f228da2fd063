use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::params::Params;
use super::vocab::{Vocab, MASK_ID, RESERVED};
use super::{Checkpoint, MlmError, ModelConfig, TrainMeta};
use crate::paradigm::closed_vocabulary;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f32,
    pub batch: usize,
    pub steps: usize,
    pub mask_rate: f64,
    /// Linear warmup length; the rate then decays linearly to a tenth.
    pub warmup: usize,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    /// Global gradient-norm clip; 0 disables clipping.
    pub clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 2e-3,
            batch: 32,
            steps: 3000,
            mask_rate: 0.15,
            warmup: 100,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip: 1.0,
            seed: 0,
        }
    }
}

/// Where training starts.
#[derive(Debug, Clone)]
pub enum Init {
    /// New model; the vocabulary is the closed word list plus every corpus token.
    Fresh(ModelConfig),
    Resume(Checkpoint),
}

/// A sentence with its corrupted input and the original ids to predict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedExample {
    pub tokens: Vec<u32>,
    pub targets: Vec<(usize, u32)>,
}

/// Hash of the corpus token stream.
pub fn corpus_hash<S: AsRef<str>>(corpus: &[Vec<S>]) -> u64 {
    let mut h = rng::FNV_OFFSET;
    for s in corpus {
        for t in s {
            h = rng::fnv1a(h, t.as_ref().as_bytes());
            h = rng::fnv1a(h, b" ");
        }
        h = rng::fnv1a(h, b"\n");
    }
    h
}

/// Select each position with probability `rate` (at least one per
/// sentence); a selected token becomes MASK with probability 0.8, a random
/// trained token with 0.1, and stays unchanged with 0.1.
pub fn mask_sentence(ids: &[u32], rate: f64, n_base: usize, r: &mut Rng) -> MaskedExample {
    let mut selected: Vec<usize> = (0..ids.len()).filter(|_| r.random::<f64>() < rate).collect();
    if selected.is_empty() && !ids.is_empty() {
        selected.push(r.random_range(0..ids.len()));
    }
    let mut tokens = ids.to_vec();
    for &p in &selected {
        let u = r.random::<f64>();
        if u < 0.8 {
            tokens[p] = MASK_ID;
        } else if u < 0.9 {
            tokens[p] = r.random_range(RESERVED.len()..n_base) as u32;
        }
    }
    MaskedExample { tokens, targets: selected.into_iter().map(|p| (p, ids[p])).collect() }
}

struct Adam {
    m: Params<f32>,
    v: Params<f32>,
    t: i32,
}

impl Adam {
    fn new(cfg: &ModelConfig) -> Self {
        Adam { m: Params::zeros(cfg), v: Params::zeros(cfg), t: 0 }
    }

    fn step(&mut self, p: &mut Params<f32>, g: &Params<f32>, lr: f32, tc: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - libm::powf(tc.beta1, self.t as f32);
        let bc2 = 1.0 - libm::powf(tc.beta2, self.t as f32);
        let gs = g.named();
        for ((((_, pt), (_, mt)), (_, vt)), (_, gt)) in
            p.named_mut().into_iter().zip(self.m.named_mut()).zip(self.v.named_mut()).zip(gs)
        {
            for i in 0..pt.len() {
                let gi = gt[i];
                mt[i] = tc.beta1 * mt[i] + (1.0 - tc.beta1) * gi;
                vt[i] = tc.beta2 * vt[i] + (1.0 - tc.beta2) * gi * gi;
                let mh = mt[i] / bc1;
                let vh = vt[i] / bc2;
                pt[i] -= lr * mh / (libm::sqrtf(vh) + tc.eps);
            }
        }
    }
}

fn schedule(tc: &TrainConfig, step: usize) -> f32 {
    if step < tc.warmup {
        return tc.lr * (step + 1) as f32 / tc.warmup as f32;
    }
    let span = tc.steps.saturating_sub(tc.warmup).max(1) as f32;
    let frac = (step - tc.warmup) as f32 / span;
    tc.lr * (1.0 - 0.9 * frac)
}

/// Train with the MLM objective. `on_step(step, loss)` receives the mean
/// cross-entropy of every batch.
pub fn train_mlm<S: AsRef<str>>(
    corpus: &[Vec<S>],
    init: Init,
    tc: &TrainConfig,
    mut on_step: impl FnMut(usize, f64),
) -> Result<Checkpoint, MlmError> {
    if corpus.is_empty() || corpus.iter().all(|s| s.is_empty()) {
        return Err(MlmError::EmptyCorpus);
    }
    if tc.batch == 0 || !(tc.mask_rate > 0.0 && tc.mask_rate <= 1.0) {
        return Err(MlmError::Invalid("batch must be positive and mask_rate in (0, 1]"));
    }
    let mut ckpt = match init {
        Init::Fresh(cfg) => {
            let words =
                closed_vocabulary().into_iter().chain(corpus.iter().flat_map(|s| s.iter().map(|t| t.as_ref().into())));
            Checkpoint::init(cfg, Vocab::from_words(words))?
        }
        Init::Resume(c) => {
            c.validate()?;
            c
        }
    };
    let cfg = ckpt.config;
    let ids: Vec<Vec<u32>> = corpus.iter().filter(|s| !s.is_empty()).map(|s| ckpt.vocab.tokenize_words(s)).collect();
    if let Some(s) = ids.iter().find(|s| s.len() > cfg.max_len) {
        return Err(MlmError::TooLong { len: s.len(), max_len: cfg.max_len });
    }
    let n_base = ckpt.vocab.n_base();
    let mut batch_rng = rng::stream(tc.seed, "batch");
    let mut mask_rng = rng::stream(tc.seed, "mask");
    let mut drop_rng = rng::stream(tc.seed, "dropout");
    let mut adam = Adam::new(&cfg);
    let mut last = f64::NAN;
    for step in 0..tc.steps {
        let batch: Vec<MaskedExample> = (0..tc.batch)
            .map(|_| {
                let s = &ids[batch_rng.random_range(0..ids.len())];
                mask_sentence(s, tc.mask_rate, n_base, &mut mask_rng)
            })
            .collect();
        let n_targets: usize = batch.iter().map(|b| b.targets.len()).sum();
        let scale = 1.0 / n_targets as f64;
        let mut grads = Params::<f32>::zeros(&cfg);
        let model = ckpt.model();
        let mut loss = 0.0;
        for ex in &batch {
            let d = if cfg.dropout > 0.0 { Some(&mut drop_rng) } else { None };
            loss += model.loss(&ex.tokens, &ex.targets, scale, Some(&mut grads), d);
        }
        loss *= scale;
        let lr = schedule(tc, step);
        if !loss.is_finite() {
            return Err(MlmError::NonFinite { step, loss, lr, last });
        }
        on_step(step, loss);
        last = loss;
        if tc.clip > 0.0 {
            let norm = libm::sqrt(grads.sq_norm());
            if norm > tc.clip {
                let f = (tc.clip / norm) as f32;
                for (_, t) in grads.named_mut() {
                    t.iter_mut().for_each(|x| *x *= f);
                }
            }
        }
        adam.step(&mut ckpt.params, &grads, lr, tc);
    }
    ckpt.meta = TrainMeta { steps: ckpt.meta.steps + tc.steps as u64, seed: tc.seed, corpus_hash: corpus_hash(corpus) };
    Ok(ckpt)
}

/// Sentences `n` copies of one template, used by tests that overfit.
#[cfg(test)]
pub(crate) fn repeat(text: &str, n: usize) -> Vec<Vec<alloc::string::String>> {
    alloc::vec![text.split_whitespace().map(Into::into).collect(); n]
}

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ProbeError;
use crate::mlm::{Checkpoint, Model, Params, MASK_ID};
use crate::paradigm::ProbeSentence;
use crate::rng;

/// Noise added to the mean embedding when a novel row is created.
pub const NOVEL_INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinetuneConfig {
    pub theme_token: String,
    pub recipient_token: String,
    pub lr: f32,
    pub max_epochs: usize,
    /// Consecutive epochs below `running max − delta` that stop tuning.
    pub patience: usize,
    /// Drop threshold in nats; infinity disables early stopping.
    #[serde(with = "infinite_as_null")]
    pub delta: f64,
    pub n_runs: usize,
    /// Run `r` uses seed `seed + r`.
    pub seed: u64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            theme_token: "thax".into(),
            recipient_token: "ricket".into(),
            lr: 0.01,
            max_epochs: 100,
            patience: 2,
            delta: 0.5,
            n_runs: 10,
            seed: 0,
        }
    }
}

impl FinetuneConfig {
    pub fn validate(&self) -> Result<(), ProbeError> {
        if self.patience == 0 || !(self.delta > 0.0) || self.n_runs == 0 || self.max_epochs == 0 {
            return Err(ProbeError::Config("need patience ≥ 1, delta > 0, n_runs ≥ 1, max_epochs ≥ 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(ProbeError::Config("lr must be positive"));
        }
        if self.theme_token == self.recipient_token {
            return Err(ProbeError::Config("theme and recipient tokens must differ"));
        }
        Ok(())
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.seed.wrapping_add(run as u64)
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneStatus {
    /// The early-stop rule fired.
    EarlyStopped,
    /// Ran to `max_epochs`.
    MaxEpochs,
    /// The objective became non-finite; the best finite epoch is returned.
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneTrace {
    /// Mean log-probability of the correct novel token, one entry per epoch,
    /// measured before that epoch's update.
    pub mean_log_prob: Vec<f64>,
    pub best_epoch: usize,
    pub status: TuneStatus,
}

/// The stopping rule: stop once the objective has stayed more than `delta`
/// below its running maximum for `patience` consecutive epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStop {
    delta: f64,
    patience: usize,
    best: f64,
    best_epoch: usize,
    below: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    /// A new running maximum.
    pub improved: bool,
    pub stop: bool,
}

impl EarlyStop {
    pub fn new(delta: f64, patience: usize) -> Self {
        EarlyStop { delta, patience, best: f64::NEG_INFINITY, best_epoch: 0, below: 0 }
    }

    pub fn observe(&mut self, epoch: usize, value: f64) -> Observation {
        let improved = value > self.best;
        if improved {
            self.best = value;
            self.best_epoch = epoch;
        }
        if value < self.best - self.delta {
            self.below += 1;
        } else {
            self.below = 0;
        }
        Observation { improved, stop: self.below >= self.patience }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Append two rows initialized to the mean embedding plus N(0, 0.02²)
/// noise; their output biases start at the mean bias. Nothing else changes.
pub fn add_novel_tokens(ckpt: &Checkpoint, names: [&str; 2], init_seed: u64) -> Result<Checkpoint, ProbeError> {
    let mut out = ckpt.clone();
    for n in names {
        out.vocab.push_novel(n)?;
    }
    let d = ckpt.config.d_model;
    let v = ckpt.vocab.len();
    let mut mean = vec![0.0f64; d];
    for row in ckpt.params.token_embedding.chunks(d) {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += f64::from(x);
        }
    }
    mean.iter_mut().for_each(|m| *m /= v as f64);
    let mean_bias = ckpt.params.output_bias.iter().map(|&b| f64::from(b)).sum::<f64>() / v as f64;
    let normal = Normal::new(0.0, NOVEL_INIT_STD).expect("valid std");
    let mut r = rng::stream(init_seed, "novel");
    for _ in names {
        for &m in &mean {
            out.params.token_embedding.push((m + normal.sample(&mut r)) as f32);
        }
        out.params.output_bias.push(mean_bias as f32);
    }
    out.config.vocab_size = out.vocab.len();
    Ok(out)
}

/// Replace the novel token of each sentence with the mask and return
/// (ids, position, novel id).
fn tuning_examples(
    ckpt: &Checkpoint,
    tuning: &[ProbeSentence],
    novel: [u32; 2],
) -> Result<Vec<(Vec<u32>, usize, u32)>, ProbeError> {
    let mut out = Vec::with_capacity(tuning.len());
    for (i, s) in tuning.iter().enumerate() {
        let mut ids = ckpt.vocab.tokenize_words(&s.tokens);
        let hits: Vec<usize> = (0..ids.len()).filter(|&p| novel.contains(&ids[p])).collect();
        if hits.len() != 1 {
            return Err(ProbeError::NovelCount { sentence: i, count: hits.len() });
        }
        let p = hits[0];
        let target = ids[p];
        ids[p] = MASK_ID;
        out.push((ids, p, target));
    }
    Ok(out)
}

/// Tune only the two novel embedding rows on the masked-novel-token loss,
/// one full-batch Adam step per epoch, keeping the best epoch.
pub fn tune_embeddings(
    ckpt: &Checkpoint,
    tuning: &[ProbeSentence],
    cfg: &FinetuneConfig,
) -> Result<(Checkpoint, TuneTrace), ProbeError> {
    cfg.validate()?;
    if tuning.is_empty() {
        return Err(ProbeError::Config("tuning set is empty"));
    }
    let id = |t: &str| ckpt.vocab.id(t).ok_or_else(|| ProbeError::UnknownNovel(t.to_string()));
    let novel = [id(&cfg.theme_token)?, id(&cfg.recipient_token)?];
    let examples = tuning_examples(ckpt, tuning, novel)?;
    for (ids, _, _) in &examples {
        if ids.len() > ckpt.config.max_len {
            return Err(crate::mlm::MlmError::TooLong { len: ids.len(), max_len: ckpt.config.max_len }.into());
        }
    }
    let d = ckpt.config.d_model;
    let rows: Vec<usize> = novel.iter().map(|&n| n as usize).collect();
    let mut work = ckpt.clone();
    let mut best_rows = read_rows(&work.params, &rows, d);
    let mut stopper = EarlyStop::new(cfg.delta, cfg.patience);
    let mut m = vec![0.0f32; 2 * d];
    let mut v = vec![0.0f32; 2 * d];
    let (b1, b2, eps) = (0.9f32, 0.999f32, 1e-8f32);
    let mut trace = Vec::new();
    let mut status = TuneStatus::MaxEpochs;
    let scale = 1.0 / examples.len() as f64;
    for epoch in 0..cfg.max_epochs {
        let mut grads = Params::<f32>::zeros(&work.config);
        let model = Model::new(&work.config, &work.params);
        let loss: f64 =
            examples.iter().map(|(ids, p, t)| model.loss(ids, &[(*p, *t)], scale, Some(&mut grads), None)).sum::<f64>()
                * scale;
        let mean_lp = -loss;
        if !mean_lp.is_finite() {
            status = TuneStatus::Diverged;
            break;
        }
        trace.push(mean_lp);
        let obs = stopper.observe(epoch, mean_lp);
        if obs.improved {
            best_rows = read_rows(&work.params, &rows, d);
        }
        if obs.stop {
            status = TuneStatus::EarlyStopped;
            break;
        }
        let t = (epoch + 1) as f32;
        let (bc1, bc2) = (1.0 - libm::powf(b1, t), 1.0 - libm::powf(b2, t));
        for (k, &row) in rows.iter().enumerate() {
            for j in 0..d {
                let g = grads.token_embedding[row * d + j];
                let i = k * d + j;
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                work.params.token_embedding[row * d + j] -= cfg.lr * (m[i] / bc1) / (libm::sqrtf(v[i] / bc2) + eps);
            }
        }
    }
    if trace.is_empty() {
        return Err(ProbeError::Config("tuning objective is not finite at initialization"));
    }
    let best_epoch = stopper.best_epoch();
    let mut out = ckpt.clone();
    for (k, &row) in rows.iter().enumerate() {
        out.params.token_embedding[row * d..(row + 1) * d].copy_from_slice(&best_rows[k * d..(k + 1) * d]);
    }
    Ok((out, TuneTrace { mean_log_prob: trace, best_epoch, status }))
}

fn read_rows(p: &Params<f32>, rows: &[usize], d: usize) -> Vec<f32> {
    rows.iter().flat_map(|&r| p.token_embedding[r * d..(r + 1) * d].iter().copied()).collect()
}

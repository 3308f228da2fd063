use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use super::config::ModelConfig;
use super::scalar::Scalar;
use crate::rng;

/// Standard deviation of the initial weights.
pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub attn_norm_gain: Vec<T>,
    pub attn_norm_bias: Vec<T>,
    pub wq: Vec<T>,
    pub bq: Vec<T>,
    pub wk: Vec<T>,
    pub bk: Vec<T>,
    pub wv: Vec<T>,
    pub bv: Vec<T>,
    pub wo: Vec<T>,
    pub bo: Vec<T>,
    pub ffn_norm_gain: Vec<T>,
    pub ffn_norm_bias: Vec<T>,
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

/// All trainable tensors, row-major. The token embedding doubles as the
/// output projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    pub token_embedding: Vec<T>,
    pub position_embedding: Vec<T>,
    pub layers: Vec<LayerParams<T>>,
    pub final_norm_gain: Vec<T>,
    pub final_norm_bias: Vec<T>,
    pub output_bias: Vec<T>,
}

impl<T: Scalar> LayerParams<T> {
    fn fields(&self) -> [(&'static str, &Vec<T>); 16] {
        [
            ("attn_norm.gain", &self.attn_norm_gain),
            ("attn_norm.bias", &self.attn_norm_bias),
            ("attn.wq", &self.wq),
            ("attn.bq", &self.bq),
            ("attn.wk", &self.wk),
            ("attn.bk", &self.bk),
            ("attn.wv", &self.wv),
            ("attn.bv", &self.bv),
            ("attn.wo", &self.wo),
            ("attn.bo", &self.bo),
            ("ffn_norm.gain", &self.ffn_norm_gain),
            ("ffn_norm.bias", &self.ffn_norm_bias),
            ("ffn.w1", &self.w1),
            ("ffn.b1", &self.b1),
            ("ffn.w2", &self.w2),
            ("ffn.b2", &self.b2),
        ]
    }

    fn fields_mut(&mut self) -> [(&'static str, &mut Vec<T>); 16] {
        [
            ("attn_norm.gain", &mut self.attn_norm_gain),
            ("attn_norm.bias", &mut self.attn_norm_bias),
            ("attn.wq", &mut self.wq),
            ("attn.bq", &mut self.bq),
            ("attn.wk", &mut self.wk),
            ("attn.bk", &mut self.bk),
            ("attn.wv", &mut self.wv),
            ("attn.bv", &mut self.bv),
            ("attn.wo", &mut self.wo),
            ("attn.bo", &mut self.bo),
            ("ffn_norm.gain", &mut self.ffn_norm_gain),
            ("ffn_norm.bias", &mut self.ffn_norm_bias),
            ("ffn.w1", &mut self.w1),
            ("ffn.b1", &mut self.b1),
            ("ffn.w2", &mut self.w2),
            ("ffn.b2", &mut self.b2),
        ]
    }
}

/// Tensor names and shapes for a config, in storage order.
pub fn tensor_shapes(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let (v, d, f) = (cfg.vocab_size, cfg.d_model, cfg.d_ff);
    let mut out = vec![("token_embedding".into(), vec![v, d]), ("position_embedding".into(), vec![cfg.max_len, d])];
    for l in 0..cfg.n_layers {
        let layer: [(&str, Vec<usize>); 16] = [
            ("attn_norm.gain", vec![d]),
            ("attn_norm.bias", vec![d]),
            ("attn.wq", vec![d, d]),
            ("attn.bq", vec![d]),
            ("attn.wk", vec![d, d]),
            ("attn.bk", vec![d]),
            ("attn.wv", vec![d, d]),
            ("attn.bv", vec![d]),
            ("attn.wo", vec![d, d]),
            ("attn.bo", vec![d]),
            ("ffn_norm.gain", vec![d]),
            ("ffn_norm.bias", vec![d]),
            ("ffn.w1", vec![d, f]),
            ("ffn.b1", vec![f]),
            ("ffn.w2", vec![f, d]),
            ("ffn.b2", vec![d]),
        ];
        out.extend(layer.into_iter().map(|(n, s)| (format!("layers.{l}.{n}"), s)));
    }
    out.push(("final_norm.gain".into(), vec![d]));
    out.push(("final_norm.bias".into(), vec![d]));
    out.push(("output_bias".into(), vec![v]));
    out
}

impl<T: Scalar> Params<T> {
    /// Named tensors in the order of [`tensor_shapes`].
    pub fn named(&self) -> Vec<(String, &Vec<T>)> {
        let mut out: Vec<(String, &Vec<T>)> = vec![
            ("token_embedding".into(), &self.token_embedding),
            ("position_embedding".into(), &self.position_embedding),
        ];
        for (l, layer) in self.layers.iter().enumerate() {
            out.extend(layer.fields().into_iter().map(|(n, t)| (format!("layers.{l}.{n}"), t)));
        }
        out.push(("final_norm.gain".into(), &self.final_norm_gain));
        out.push(("final_norm.bias".into(), &self.final_norm_bias));
        out.push(("output_bias".into(), &self.output_bias));
        out
    }

    pub fn named_mut(&mut self) -> Vec<(String, &mut Vec<T>)> {
        let mut out: Vec<(String, &mut Vec<T>)> = vec![
            ("token_embedding".into(), &mut self.token_embedding),
            ("position_embedding".into(), &mut self.position_embedding),
        ];
        for (l, layer) in self.layers.iter_mut().enumerate() {
            out.extend(layer.fields_mut().into_iter().map(|(n, t)| (format!("layers.{l}.{n}"), t)));
        }
        out.push(("final_norm.gain".into(), &mut self.final_norm_gain));
        out.push(("final_norm.bias".into(), &mut self.final_norm_bias));
        out.push(("output_bias".into(), &mut self.output_bias));
        out
    }

    /// Build from tensors in storage order (as produced by [`Params::named`]).
    pub fn from_tensors(cfg: &ModelConfig, mut tensors: Vec<Vec<T>>) -> Option<Self> {
        let shapes = tensor_shapes(cfg);
        if tensors.len() != shapes.len() {
            return None;
        }
        for (t, (_, s)) in tensors.iter().zip(&shapes) {
            if t.len() != s.iter().product::<usize>() {
                return None;
            }
        }
        let mut it = tensors.drain(..);
        let mut next = || it.next().unwrap();
        let token_embedding = next();
        let position_embedding = next();
        let mut layers = Vec::with_capacity(cfg.n_layers);
        for _ in 0..cfg.n_layers {
            layers.push(LayerParams {
                attn_norm_gain: next(),
                attn_norm_bias: next(),
                wq: next(),
                bq: next(),
                wk: next(),
                bk: next(),
                wv: next(),
                bv: next(),
                wo: next(),
                bo: next(),
                ffn_norm_gain: next(),
                ffn_norm_bias: next(),
                w1: next(),
                b1: next(),
                w2: next(),
                b2: next(),
            });
        }
        Some(Params {
            token_embedding,
            position_embedding,
            layers,
            final_norm_gain: next(),
            final_norm_bias: next(),
            output_bias: next(),
        })
    }

    pub fn zeros(cfg: &ModelConfig) -> Self {
        let tensors = tensor_shapes(cfg).into_iter().map(|(_, s)| vec![T::ZERO; s.iter().product()]).collect();
        Self::from_tensors(cfg, tensors).expect("shapes from config")
    }

    /// Gaussian weights and embeddings, zero biases, unit norm gains.
    pub fn init(cfg: &ModelConfig) -> Self {
        let mut p = Self::zeros(cfg);
        let mut r = rng::stream(cfg.seed, "init");
        let normal = Normal::new(0.0, INIT_STD).expect("valid std");
        for (name, t) in p.named_mut() {
            if name.ends_with(".gain") {
                t.iter_mut().for_each(|x| *x = T::ONE);
            } else if name.contains("embedding") || name.contains(".w") {
                t.iter_mut().for_each(|x| *x = T::from_f64(normal.sample(&mut r)));
            }
        }
        p
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Params<U> {
        let m = |v: &Vec<T>| v.iter().map(|&x| f(x)).collect::<Vec<U>>();
        Params {
            token_embedding: m(&self.token_embedding),
            position_embedding: m(&self.position_embedding),
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    attn_norm_gain: m(&l.attn_norm_gain),
                    attn_norm_bias: m(&l.attn_norm_bias),
                    wq: m(&l.wq),
                    bq: m(&l.bq),
                    wk: m(&l.wk),
                    bk: m(&l.bk),
                    wv: m(&l.wv),
                    bv: m(&l.bv),
                    wo: m(&l.wo),
                    bo: m(&l.bo),
                    ffn_norm_gain: m(&l.ffn_norm_gain),
                    ffn_norm_bias: m(&l.ffn_norm_bias),
                    w1: m(&l.w1),
                    b1: m(&l.b1),
                    w2: m(&l.w2),
                    b2: m(&l.b2),
                })
                .collect(),
            final_norm_gain: m(&self.final_norm_gain),
            final_norm_bias: m(&self.final_norm_bias),
            output_bias: m(&self.output_bias),
        }
    }

    pub fn len(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of squares in f64.
    pub fn sq_norm(&self) -> f64 {
        self.named().iter().flat_map(|(_, t)| t.iter()).map(|x| x.to_f64() * x.to_f64()).sum()
    }
}

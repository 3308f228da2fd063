//! Pre-norm transformer encoder with tied input/output embeddings, written
//! out by hand together with its backward pass.
//!
//! Layout per layer: `x += Attn(LN(x))`, `x += FFN(LN(x))`; a final layer
//! norm feeds the output projection `logits = z · Eᵀ + b`, where `E` is the
//! token embedding matrix. Matrix products accumulate in `T`; normalization
//! statistics, softmax normalizers and losses accumulate in f64.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::config::ModelConfig;
use super::params::{LayerParams, Params};
use super::scalar::Scalar;
use crate::rng::Rng;

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

struct NormTrace<T> {
    xhat: Vec<T>,
    rstd: Vec<T>,
}

struct LayerTrace<T> {
    ln1: NormTrace<T>,
    a: Vec<T>,
    q: Vec<T>,
    k: Vec<T>,
    v: Vec<T>,
    probs: Vec<T>,
    ctx: Vec<T>,
    drop_attn: Option<Vec<T>>,
    ln2: NormTrace<T>,
    b: Vec<T>,
    pre: Vec<T>,
    act: Vec<T>,
    drop_ffn: Option<Vec<T>>,
}

/// Everything the backward pass needs from one forward pass.
pub struct Trace<T> {
    tokens: Vec<u32>,
    layers: Vec<LayerTrace<T>>,
    final_norm: NormTrace<T>,
    /// Final hidden states, `len × d_model`.
    pub hidden: Vec<T>,
}

impl<T> Trace<T> {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn layer_norm<T: Scalar>(x: &[T], d: usize, gain: &[T], bias: &[T]) -> (Vec<T>, NormTrace<T>) {
    let rows = x.len() / d;
    let mut y = vec![T::ZERO; x.len()];
    let mut xhat = vec![T::ZERO; x.len()];
    let mut rstd = vec![T::ZERO; rows];
    for r in 0..rows {
        let row = &x[r * d..(r + 1) * d];
        let mean = row.iter().map(|v| v.to_f64()).sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v.to_f64() - mean) * (v.to_f64() - mean)).sum::<f64>() / d as f64;
        let rs = 1.0 / libm::sqrt(var + LN_EPS);
        rstd[r] = T::from_f64(rs);
        for j in 0..d {
            let h = T::from_f64((row[j].to_f64() - mean) * rs);
            xhat[r * d + j] = h;
            y[r * d + j] = h * gain[j] + bias[j];
        }
    }
    (y, NormTrace { xhat, rstd })
}

fn layer_norm_backward<T: Scalar>(
    dy: &[T],
    d: usize,
    trace: &NormTrace<T>,
    gain: &[T],
    dgain: &mut [T],
    dbias: &mut [T],
) -> Vec<T> {
    let rows = dy.len() / d;
    let mut dx = vec![T::ZERO; dy.len()];
    let mut dxhat = vec![T::ZERO; d];
    for r in 0..rows {
        let (mut m1, mut m2) = (0.0f64, 0.0f64);
        for j in 0..d {
            let i = r * d + j;
            dgain[j] += dy[i] * trace.xhat[i];
            dbias[j] += dy[i];
            dxhat[j] = dy[i] * gain[j];
            m1 += dxhat[j].to_f64();
            m2 += (dxhat[j] * trace.xhat[i]).to_f64();
        }
        m1 /= d as f64;
        m2 /= d as f64;
        let rs = trace.rstd[r].to_f64();
        for j in 0..d {
            let i = r * d + j;
            dx[i] = T::from_f64(rs * (dxhat[j].to_f64() - m1 - trace.xhat[i].to_f64() * m2));
        }
    }
    dx
}

/// `y = x · W + b` with `x: rows × din`, `W: din × dout`.
fn linear<T: Scalar>(x: &[T], din: usize, w: &[T], b: &[T], dout: usize) -> Vec<T> {
    let rows = x.len() / din;
    let mut y = vec![T::ZERO; rows * dout];
    for r in 0..rows {
        let yr = &mut y[r * dout..(r + 1) * dout];
        yr.copy_from_slice(b);
        for k in 0..din {
            let xv = x[r * din + k];
            let wr = &w[k * dout..(k + 1) * dout];
            for (yj, &wj) in yr.iter_mut().zip(wr) {
                *yj += xv * wj;
            }
        }
    }
    y
}

/// Accumulates `dW += xᵀ dy`, `db += Σ dy`, returns `dx = dy · Wᵀ`.
fn linear_backward<T: Scalar>(
    dy: &[T],
    x: &[T],
    din: usize,
    w: &[T],
    dout: usize,
    dw: &mut [T],
    db: &mut [T],
) -> Vec<T> {
    let rows = x.len() / din;
    let mut dx = vec![T::ZERO; rows * din];
    for r in 0..rows {
        let dyr = &dy[r * dout..(r + 1) * dout];
        for (dbj, &g) in db.iter_mut().zip(dyr) {
            *dbj += g;
        }
        for k in 0..din {
            let wr = &w[k * dout..(k + 1) * dout];
            let mut acc = T::ZERO;
            for (&wj, &g) in wr.iter().zip(dyr) {
                acc += wj * g;
            }
            dx[r * din + k] = acc;
            let xv = x[r * din + k];
            let dwr = &mut dw[k * dout..(k + 1) * dout];
            for (dwj, &g) in dwr.iter_mut().zip(dyr) {
                *dwj += xv * g;
            }
        }
    }
    dx
}

fn gelu<T: Scalar>(x: T) -> T {
    let xf = x.to_f64();
    let t = libm::tanh(GELU_C * (xf + GELU_A * xf * xf * xf));
    T::from_f64(0.5 * xf * (1.0 + t))
}

fn gelu_grad<T: Scalar>(x: T) -> T {
    let xf = x.to_f64();
    let t = libm::tanh(GELU_C * (xf + GELU_A * xf * xf * xf));
    T::from_f64(0.5 * (1.0 + t) + 0.5 * xf * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * xf * xf))
}

fn dropout_mask<T: Scalar>(n: usize, rate: f32, rng: &mut Rng) -> Vec<T> {
    let keep = T::from_f64(1.0 / (1.0 - f64::from(rate)));
    (0..n).map(|_| if rng.random::<f32>() < rate { T::ZERO } else { keep }).collect()
}

/// Log-softmax of `logits` in f64.
pub fn log_softmax<T: Scalar>(logits: &[T]) -> Vec<f64> {
    let max = logits.iter().map(|l| l.to_f64()).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|l| libm::exp(l.to_f64() - max)).sum();
    let lse = max + libm::log(sum);
    logits.iter().map(|l| l.to_f64() - lse).collect()
}

/// Borrowed model: parameters plus shape.
pub struct Model<'a, T> {
    pub cfg: &'a ModelConfig,
    pub params: &'a Params<T>,
}

impl<'a, T: Scalar> Model<'a, T> {
    pub fn new(cfg: &'a ModelConfig, params: &'a Params<T>) -> Self {
        Model { cfg, params }
    }

    fn vocab_rows(&self) -> usize {
        self.params.output_bias.len()
    }

    /// Forward pass. Dropout is applied only when an rng is supplied and the
    /// configured rate is positive.
    pub fn forward(&self, tokens: &[u32], mut dropout: Option<&mut Rng>) -> Trace<T> {
        let d = self.cfg.d_model;
        let len = tokens.len();
        let p = self.params;
        let mut x = vec![T::ZERO; len * d];
        for (t, &tok) in tokens.iter().enumerate() {
            let e = &p.token_embedding[tok as usize * d..(tok as usize + 1) * d];
            let pe = &p.position_embedding[t * d..(t + 1) * d];
            for j in 0..d {
                x[t * d + j] = e[j] + pe[j];
            }
        }
        let rate = self.cfg.dropout;
        let mut layers = Vec::with_capacity(p.layers.len());
        for lp in &p.layers {
            let (a, ln1) = layer_norm(&x, d, &lp.attn_norm_gain, &lp.attn_norm_bias);
            let q = linear(&a, d, &lp.wq, &lp.bq, d);
            let k = linear(&a, d, &lp.wk, &lp.bk, d);
            let v = linear(&a, d, &lp.wv, &lp.bv, d);
            let (ctx, probs) = self.attention(&q, &k, &v, len);
            let o = linear(&ctx, d, &lp.wo, &lp.bo, d);
            let drop_attn = match dropout.as_deref_mut() {
                Some(r) if rate > 0.0 => Some(dropout_mask::<T>(o.len(), rate, r)),
                _ => None,
            };
            for i in 0..x.len() {
                x[i] += match &drop_attn {
                    Some(m) => o[i] * m[i],
                    None => o[i],
                };
            }
            let (b, ln2) = layer_norm(&x, d, &lp.ffn_norm_gain, &lp.ffn_norm_bias);
            let pre = linear(&b, d, &lp.w1, &lp.b1, self.cfg.d_ff);
            let act: Vec<T> = pre.iter().map(|&z| gelu(z)).collect();
            let f = linear(&act, self.cfg.d_ff, &lp.w2, &lp.b2, d);
            let drop_ffn = match dropout.as_deref_mut() {
                Some(r) if rate > 0.0 => Some(dropout_mask::<T>(f.len(), rate, r)),
                _ => None,
            };
            for i in 0..x.len() {
                x[i] += match &drop_ffn {
                    Some(m) => f[i] * m[i],
                    None => f[i],
                };
            }
            layers.push(LayerTrace { ln1, a, q, k, v, probs, ctx, drop_attn, ln2, b, pre, act, drop_ffn });
        }
        let (hidden, final_norm) = layer_norm(&x, d, &p.final_norm_gain, &p.final_norm_bias);
        Trace { tokens: tokens.to_vec(), layers, final_norm, hidden }
    }

    fn attention(&self, q: &[T], k: &[T], v: &[T], len: usize) -> (Vec<T>, Vec<T>) {
        let d = self.cfg.d_model;
        let hd = self.cfg.head_dim();
        let scale = 1.0 / libm::sqrt(hd as f64);
        let mut ctx = vec![T::ZERO; len * d];
        let mut probs = vec![T::ZERO; self.cfg.n_heads * len * len];
        let mut scores = vec![0.0f64; len];
        for h in 0..self.cfg.n_heads {
            let off = h * hd;
            for i in 0..len {
                let qi = &q[i * d + off..i * d + off + hd];
                for (j, s) in scores.iter_mut().enumerate() {
                    let kj = &k[j * d + off..j * d + off + hd];
                    let mut acc = T::ZERO;
                    for c in 0..hd {
                        acc += qi[c] * kj[c];
                    }
                    *s = acc.to_f64() * scale;
                }
                let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for s in scores.iter_mut() {
                    *s = libm::exp(*s - max);
                    sum += *s;
                }
                let prow = &mut probs[(h * len + i) * len..(h * len + i + 1) * len];
                for j in 0..len {
                    prow[j] = T::from_f64(scores[j] / sum);
                }
                let ci = &mut ctx[i * d + off..i * d + off + hd];
                for j in 0..len {
                    let pj = prow[j];
                    let vj = &v[j * d + off..j * d + off + hd];
                    for c in 0..hd {
                        ci[c] += pj * vj[c];
                    }
                }
            }
        }
        (ctx, probs)
    }

    /// Logits over the vocabulary for hidden state row `pos`.
    pub fn logits(&self, trace: &Trace<T>, pos: usize) -> Vec<T> {
        let d = self.cfg.d_model;
        let z = &trace.hidden[pos * d..(pos + 1) * d];
        let e = &self.params.token_embedding;
        (0..self.vocab_rows())
            .map(|vid| {
                let row = &e[vid * d..(vid + 1) * d];
                let mut acc = self.params.output_bias[vid];
                for j in 0..d {
                    acc += row[j] * z[j];
                }
                acc
            })
            .collect()
    }

    /// Summed cross-entropy at `targets` (position, token id). When `grads`
    /// is given, accumulates `scale ×` the gradient of that sum into it.
    pub fn loss(
        &self,
        tokens: &[u32],
        targets: &[(usize, u32)],
        scale: f64,
        grads: Option<&mut Params<T>>,
        dropout: Option<&mut Rng>,
    ) -> f64 {
        let trace = self.forward(tokens, dropout);
        let d = self.cfg.d_model;
        let n_vocab = self.vocab_rows();
        let mut total = 0.0;
        let mut dhidden = grads.as_ref().map(|_| vec![T::ZERO; trace.hidden.len()]);
        let mut dlogits = vec![T::ZERO; n_vocab];
        let e = &self.params.token_embedding;
        let mut grads = grads;
        for &(pos, target) in targets {
            let logits = self.logits(&trace, pos);
            let lp = log_softmax(&logits);
            total -= lp[target as usize];
            let (Some(g), Some(dh)) = (grads.as_deref_mut(), dhidden.as_mut()) else { continue };
            for vid in 0..n_vocab {
                let onehot = if vid == target as usize { 1.0 } else { 0.0 };
                dlogits[vid] = T::from_f64((libm::exp(lp[vid]) - onehot) * scale);
            }
            let z = &trace.hidden[pos * d..(pos + 1) * d];
            let dz = &mut dh[pos * d..(pos + 1) * d];
            for vid in 0..n_vocab {
                let gl = dlogits[vid];
                g.output_bias[vid] += gl;
                let row = &e[vid * d..(vid + 1) * d];
                let grow = &mut g.token_embedding[vid * d..(vid + 1) * d];
                for j in 0..d {
                    grow[j] += gl * z[j];
                    dz[j] += gl * row[j];
                }
            }
        }
        if let (Some(g), Some(dh)) = (grads, dhidden) {
            self.backward(&trace, &dh, g);
        }
        total
    }

    /// Backpropagate a gradient on the final hidden states.
    pub fn backward(&self, trace: &Trace<T>, dhidden: &[T], g: &mut Params<T>) {
        let d = self.cfg.d_model;
        let f = self.cfg.d_ff;
        let len = trace.len();
        let p = self.params;
        let mut dx = layer_norm_backward(
            dhidden,
            d,
            &trace.final_norm,
            &p.final_norm_gain,
            &mut g.final_norm_gain,
            &mut g.final_norm_bias,
        );
        for (l, lt) in trace.layers.iter().enumerate().rev() {
            let lp: &LayerParams<T> = &p.layers[l];
            let lg = &mut g.layers[l];

            let df: Vec<T> = match &lt.drop_ffn {
                Some(m) => dx.iter().zip(m).map(|(&a, &b)| a * b).collect(),
                None => dx.clone(),
            };
            let dact = linear_backward(&df, &lt.act, f, &lp.w2, d, &mut lg.w2, &mut lg.b2);
            let dpre: Vec<T> = dact.iter().zip(&lt.pre).map(|(&g_, &z)| g_ * gelu_grad(z)).collect();
            let db = linear_backward(&dpre, &lt.b, d, &lp.w1, f, &mut lg.w1, &mut lg.b1);
            let dres =
                layer_norm_backward(&db, d, &lt.ln2, &lp.ffn_norm_gain, &mut lg.ffn_norm_gain, &mut lg.ffn_norm_bias);
            for (a, b) in dx.iter_mut().zip(&dres) {
                *a += *b;
            }

            let dout: Vec<T> = match &lt.drop_attn {
                Some(m) => dx.iter().zip(m).map(|(&a, &b)| a * b).collect(),
                None => dx.clone(),
            };
            let dctx = linear_backward(&dout, &lt.ctx, d, &lp.wo, d, &mut lg.wo, &mut lg.bo);
            let (dq, dk, dv) = self.attention_backward(lt, &dctx, len);
            let mut da = linear_backward(&dq, &lt.a, d, &lp.wq, d, &mut lg.wq, &mut lg.bq);
            for (a, b) in da.iter_mut().zip(linear_backward(&dk, &lt.a, d, &lp.wk, d, &mut lg.wk, &mut lg.bk)) {
                *a += b;
            }
            for (a, b) in da.iter_mut().zip(linear_backward(&dv, &lt.a, d, &lp.wv, d, &mut lg.wv, &mut lg.bv)) {
                *a += b;
            }
            let dres = layer_norm_backward(
                &da,
                d,
                &lt.ln1,
                &lp.attn_norm_gain,
                &mut lg.attn_norm_gain,
                &mut lg.attn_norm_bias,
            );
            for (a, b) in dx.iter_mut().zip(&dres) {
                *a += *b;
            }
        }
        for (t, &tok) in trace.tokens.iter().enumerate() {
            let ge = &mut g.token_embedding[tok as usize * d..(tok as usize + 1) * d];
            for j in 0..d {
                ge[j] += dx[t * d + j];
            }
            let gp = &mut g.position_embedding[t * d..(t + 1) * d];
            for j in 0..d {
                gp[j] += dx[t * d + j];
            }
        }
    }

    fn attention_backward(&self, lt: &LayerTrace<T>, dctx: &[T], len: usize) -> (Vec<T>, Vec<T>, Vec<T>) {
        let d = self.cfg.d_model;
        let hd = self.cfg.head_dim();
        let scale = T::from_f64(1.0 / libm::sqrt(hd as f64));
        let mut dq = vec![T::ZERO; len * d];
        let mut dk = vec![T::ZERO; len * d];
        let mut dv = vec![T::ZERO; len * d];
        let mut dp = vec![T::ZERO; len];
        for h in 0..self.cfg.n_heads {
            let off = h * hd;
            for i in 0..len {
                let prow = &lt.probs[(h * len + i) * len..(h * len + i + 1) * len];
                let dci = &dctx[i * d + off..i * d + off + hd];
                let mut weighted = 0.0f64;
                for j in 0..len {
                    let vj = &lt.v[j * d + off..j * d + off + hd];
                    let mut acc = T::ZERO;
                    for c in 0..hd {
                        acc += dci[c] * vj[c];
                    }
                    dp[j] = acc;
                    weighted += (prow[j] * acc).to_f64();
                    let dvj = &mut dv[j * d + off..j * d + off + hd];
                    for c in 0..hd {
                        dvj[c] += prow[j] * dci[c];
                    }
                }
                let w = T::from_f64(weighted);
                for j in 0..len {
                    let ds = prow[j] * (dp[j] - w) * scale;
                    for c in 0..hd {
                        dq[i * d + off + c] += ds * lt.k[j * d + off + c];
                        dk[j * d + off + c] += ds * lt.q[i * d + off + c];
                    }
                }
            }
        }
        (dq, dk, dv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (ModelConfig, Params<f64>) {
        let cfg = ModelConfig::tiny(11);
        let p = Params::<f32>::init(&cfg).map(f64::from);
        (cfg, p)
    }

    #[test]
    fn layer_norm_rows_are_standardized() {
        let x = [1.0f64, 2.0, 3.0, 4.0, -1.0, 0.0, 5.0, 2.0];
        let (y, _) = layer_norm(&x, 4, &[1.0; 4], &[0.0; 4]);
        for r in 0..2 {
            let row = &y[r * 4..r * 4 + 4];
            let mean: f64 = row.iter().sum::<f64>() / 4.0;
            let var: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let (cfg, p) = tiny();
        let m = Model::new(&cfg, &p);
        let tr = m.forward(&[3, 4, 5, 1, 6], None);
        for lt in &tr.layers {
            for row in lt.probs.chunks(5) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gelu_derivative_matches_difference() {
        for &x in &[-3.0f64, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8, "{x}");
        }
    }

    #[test]
    fn log_softmax_normalizes() {
        let lp = log_softmax(&[1.0f32, -2.0, 0.5, 30.0]);
        let s: f64 = lp.iter().map(|l| libm::exp(*l)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dropout_off_without_rng() {
        let (mut cfg, p) = tiny();
        cfg.dropout = 0.5;
        let m = Model::new(&cfg, &p);
        let a = m.forward(&[3, 4, 5], None);
        let b = m.forward(&[3, 4, 5], None);
        assert_eq!(a.hidden, b.hidden);
        let mut r = crate::rng::stream(0, "dropout");
        let c = m.forward(&[3, 4, 5], Some(&mut r));
        assert_ne!(a.hidden, c.hidden);
    }
}

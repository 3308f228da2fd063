use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;

use super::params::Params;
use super::train::MaskedExample;
use super::{Checkpoint, MlmError, Model};
use crate::rng;

/// Worst disagreement found by [`grad_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub n_checked: usize,
}

/// Mean masked cross-entropy over `batch` and its gradient, in f64.
pub fn loss_and_grad(ckpt: &Checkpoint, batch: &[MaskedExample]) -> (f64, Params<f64>) {
    let p = ckpt.params.map(f64::from);
    let mut g = Params::<f64>::zeros(&ckpt.config);
    let loss = batch_loss(ckpt, &p, batch, Some(&mut g));
    (loss, g)
}

fn batch_loss(ckpt: &Checkpoint, p: &Params<f64>, batch: &[MaskedExample], mut g: Option<&mut Params<f64>>) -> f64 {
    let n: usize = batch.iter().map(|b| b.targets.len()).sum();
    let scale = 1.0 / n.max(1) as f64;
    let model = Model::new(&ckpt.config, p);
    batch.iter().map(|ex| model.loss(&ex.tokens, &ex.targets, scale, g.as_deref_mut(), None)).sum::<f64>() * scale
}

/// Compare the analytic gradient with central differences at up to
/// `per_tensor` sampled entries of every tensor, plus every entry of the
/// embedding rows used by the batch. Relative error is
/// `|a − n| / max(|a| + |n|, floor)`.
pub fn grad_check(
    ckpt: &Checkpoint,
    batch: &[MaskedExample],
    epsilon: f64,
    per_tensor: usize,
    floor: f64,
    seed: u64,
) -> Result<GradCheck, MlmError> {
    if !(epsilon > 0.0) {
        return Err(MlmError::Epsilon);
    }
    ckpt.validate()?;
    let (_, grads) = loss_and_grad(ckpt, batch);
    let base = ckpt.params.map(f64::from);
    let d = ckpt.config.d_model;
    let mut used: Vec<usize> =
        batch.iter().flat_map(|b| b.tokens.iter().chain(b.targets.iter().map(|t| &t.1))).map(|&t| t as usize).collect();
    used.sort_unstable();
    used.dedup();

    let mut r = rng::stream(seed, "gradcheck");
    let names: Vec<(String, usize)> = base.named().into_iter().map(|(n, t)| (n, t.len())).collect();
    let mut worst =
        GradCheck { max_rel_err: 0.0, tensor: String::new(), index: 0, analytic: 0.0, numeric: 0.0, n_checked: 0 };
    for (ti, (name, len)) in names.iter().enumerate() {
        let mut idx: Vec<usize> = index::sample(&mut r, *len, per_tensor.min(*len)).into_vec();
        if ti == 0 {
            idx.extend(used.iter().flat_map(|&row| row * d..(row + 1) * d));
        }
        idx.sort_unstable();
        idx.dedup();
        let analytic = &grads.named()[ti].1;
        for i in idx {
            let mut p = base.clone();
            let at = |p: &mut Params<f64>, v: f64| p.named_mut()[ti].1[i] = v;
            let x = base.named()[ti].1[i];
            at(&mut p, x + epsilon);
            let up = batch_loss(ckpt, &p, batch, None);
            at(&mut p, x - epsilon);
            let down = batch_loss(ckpt, &p, batch, None);
            let numeric = (up - down) / (2.0 * epsilon);
            let a = analytic[i];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(floor);
            worst.n_checked += 1;
            if rel > worst.max_rel_err {
                worst = GradCheck {
                    max_rel_err: rel,
                    tensor: name.clone(),
                    index: i,
                    analytic: a,
                    numeric,
                    n_checked: worst.n_checked,
                };
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlm::{mask_sentence, ModelConfig, Vocab};
    use crate::paradigm::closed_vocabulary;

    fn tiny() -> Checkpoint {
        let words: Vec<String> = closed_vocabulary().into_iter().take(40).collect();
        let mut ck = Checkpoint::init(ModelConfig::tiny(0), Vocab::from_words(words)).unwrap();
        // Non-trivial norms and biases so every path carries gradient.
        let mut r = rng::stream(9, "perturb");
        for (_, t) in ck.params.named_mut() {
            for x in t.iter_mut() {
                *x += (rand::Rng::random::<f32>(&mut r) - 0.5) * 0.2;
            }
        }
        ck
    }

    fn batch(ck: &Checkpoint) -> Vec<MaskedExample> {
        let mut r = rng::stream(1, "mask");
        let n = ck.vocab.len() as u32;
        (0..3)
            .map(|k| {
                let ids: Vec<u32> = (0..6 + k).map(|i| 3 + (i * 7 + k * 5) % (n - 3)).collect();
                mask_sentence(&ids, 0.3, ck.vocab.n_base(), &mut r)
            })
            .collect()
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let ck = tiny();
        let g = grad_check(&ck, &batch(&ck), 1e-4, 6, 1e-7, 0).unwrap();
        assert!(g.max_rel_err < 1e-4, "{g:?}");
        assert!(g.n_checked > 100);
    }

    #[test]
    fn zero_epsilon_is_rejected() {
        let ck = tiny();
        assert_eq!(grad_check(&ck, &batch(&ck), 0.0, 1, 1e-7, 0), Err(MlmError::Epsilon));
    }

    #[test]
    fn confident_targets_give_vanishing_gradient() {
        let mut ck = tiny();
        let mut ex = batch(&ck).remove(0);
        let t = ex.targets[0].1;
        ex.targets.retain(|x| x.1 == t);
        ck.params.output_bias[t as usize] = 60.0;
        let (loss, g) = loss_and_grad(&ck, &[ex]);
        assert!(loss < 1e-12, "{loss}");
        assert!(libm::sqrt(g.sq_norm()) < 1e-9);
    }
}

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ProbeError;
use crate::mlm::MaskDistribution;
use crate::paradigm::NounInventory;

/// Floor applied to each probability mass before taking the ratio.
pub const MASS_FLOOR: f64 = 1e-12;

/// Tolerance on the total mass of a complete distribution.
pub const NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aconf {
    pub value: f64,
    /// One of the two masses hit the floor.
    pub saturated: bool,
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + libm::log(xs.map(|x| libm::exp(x - max)).sum::<f64>())
}

fn lookup<'a>(d: &'a MaskDistribution, words: &'a [String], missing: &mut Vec<String>) -> Vec<f64> {
    words
        .iter()
        .filter_map(|w| {
            let lp = d.log_prob(w);
            if lp.is_none() {
                missing.push(w.clone());
            }
            lp
        })
        .collect()
}

/// `ln(Σ_animate p / Σ_inanimate p)` in nats, each mass floored at
/// [`MASS_FLOOR`].
pub fn animacy_confidence(d: &MaskDistribution, inv: &NounInventory) -> Result<Aconf, ProbeError> {
    let mut missing = Vec::new();
    let a = lookup(d, &inv.animate, &mut missing);
    let i = lookup(d, &inv.inanimate, &mut missing);
    if !missing.is_empty() {
        return Err(ProbeError::MissingTokens(missing));
    }
    let floor = libm::log(MASS_FLOOR);
    let la = log_sum_exp(a.iter().copied());
    let li = log_sum_exp(i.iter().copied());
    Ok(Aconf { value: la.max(floor) - li.max(floor), saturated: la < floor || li < floor })
}

/// `−Σ p ln p` in nats over a complete distribution, or the carried entropy
/// of a restricted one.
pub fn entropy(d: &MaskDistribution) -> Result<f64, ProbeError> {
    if !d.complete {
        return d.entropy.ok_or(ProbeError::NoEntropy);
    }
    let total: f64 = d.log_probs.values().map(|&l| libm::exp(l)).sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(ProbeError::NotNormalized(total));
    }
    let h: f64 = d.log_probs.values().filter(|l| l.is_finite()).map(|&l| -libm::exp(l) * l).sum();
    Ok(h.max(0.0))
}

/// `ln p(a) − ln p(b)`.
pub fn log_odds(d: &MaskDistribution, a: &str, b: &str) -> Result<f64, ProbeError> {
    let la = d.log_prob(a).ok_or_else(|| ProbeError::MissingTokens(alloc::vec![a.to_string()]))?;
    let lb = d.log_prob(b).ok_or_else(|| ProbeError::MissingTokens(alloc::vec![b.to_string()]))?;
    Ok(la - lb)
}

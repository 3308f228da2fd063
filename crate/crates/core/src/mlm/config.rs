use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    /// Residual-branch dropout, applied only while training.
    pub dropout: f32,
    /// Seed for parameter initialization.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_layers: 2,
            n_heads: 4,
            d_model: 64,
            d_ff: 256,
            max_len: 16,
            vocab_size: 0,
            dropout: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("d_model {d_model} is not divisible by n_heads {n_heads}")]
    HeadSplit { d_model: usize, n_heads: usize },
    #[error("dropout must lie in [0, 1)")]
    Dropout,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_model", self.d_model),
            ("d_ff", self.d_ff),
            ("max_len", self.max_len),
            ("vocab_size", self.vocab_size),
        ] {
            if v == 0 {
                return Err(ConfigError::Zero(name));
            }
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(ConfigError::HeadSplit { d_model: self.d_model, n_heads: self.n_heads });
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ConfigError::Dropout);
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// A tiny shape for gradient checks and fast tests.
    pub fn tiny(vocab_size: usize) -> Self {
        ModelConfig { n_layers: 2, n_heads: 2, d_model: 16, d_ff: 32, max_len: 12, vocab_size, dropout: 0.0, seed: 1 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let ok = ModelConfig { vocab_size: 10, ..ModelConfig::default() };
        assert_eq!(ok.validate(), Ok(()));
        assert_eq!(ok.head_dim(), 16);
        assert_eq!(ModelConfig::default().validate(), Err(ConfigError::Zero("vocab_size")));
        assert_eq!(
            ModelConfig { n_heads: 3, ..ok }.validate(),
            Err(ConfigError::HeadSplit { d_model: 64, n_heads: 3 })
        );
        assert_eq!(ModelConfig { dropout: 1.0, ..ok }.validate(), Err(ConfigError::Dropout));
        assert_eq!(ModelConfig { n_layers: 0, ..ok }.validate(), Err(ConfigError::Zero("n_layers")));
    }
}

//! JSON experiment configuration.

use std::env;
use std::path::PathBuf;

use rolebench_core::paradigm::{verb_forms, DITRANSITIVE_VERBS};
use rolebench_core::probing::FinetuneConfig;
use rolebench_core::{Frame, Voice};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Overrides `output_dir` when set.
pub const OUT_ENV: &str = "ROLEBENCH_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    #[default]
    Exp1,
    Exp2,
}

/// A checkpoint file served in-process, or a protocol server at `host:port`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendSpec {
    Checkpoint(PathBuf),
    Remote(String),
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Checkpoint("model.rbck".into())
    }
}

/// Experiment 1 probes taken from treebank files instead of the generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreebankProbes {
    pub paths: Vec<PathBuf>,
    /// Sentences kept per frame × voice cell, first in corpus order.
    pub cap: usize,
    /// Source ids (`<file stem>:<tree index>`) dropped before capping.
    pub exclude: Vec<String>,
}

impl Default for TreebankProbes {
    fn default() -> Self {
        TreebankProbes { paths: Vec::new(), cap: 50, exclude: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub backend: BackendSpec,
    pub treebank: Option<TreebankProbes>,
    pub frames: Vec<Frame>,
    pub voices: Vec<Voice>,
    /// Verbs of the generated evaluation sentences.
    pub verbs: Vec<String>,
    /// Generated sentences per frame × voice × verb cell.
    pub n_variants: usize,
    /// Seed of the generated sentences; exp2 run `r` uses `eval_seed + r`.
    pub eval_seed: u64,
    /// Verb of the tuning paradigm.
    pub training_verb: String,
    /// Tuning frames; each becomes one row of the accuracy tables.
    pub regimens: Vec<Frame>,
    pub finetune: FinetuneConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::Exp1,
            backend: BackendSpec::default(),
            treebank: None,
            frames: Frame::ALL.to_vec(),
            voices: Voice::ALL.to_vec(),
            verbs: DITRANSITIVE_VERBS.iter().map(|v| v.lemma.to_owned()).collect(),
            n_variants: 12,
            eval_seed: 1,
            training_verb: "give".into(),
            regimens: Frame::ALL.to_vec(),
            finetune: FinetuneConfig::default(),
            output_dir: "out".into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.frames.is_empty() || self.voices.is_empty() || self.verbs.is_empty() {
            return bad("frames, voices and verbs must be nonempty".into());
        }
        if self.n_variants == 0 {
            return bad("n_variants must be at least 1".into());
        }
        for v in self.verbs.iter().chain([&self.training_verb]) {
            if verb_forms(v).is_none() {
                return bad(format!("unknown verb '{v}'"));
            }
        }
        if self.experiment == Experiment::Exp2 && self.regimens.is_empty() {
            return bad("exp2 needs at least one training regimen".into());
        }
        if let Some(t) = &self.treebank {
            if t.paths.is_empty() || t.cap == 0 {
                return bad("treebank probes need paths and a positive cap".into());
            }
        }
        self.finetune.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// `output_dir`, unless the environment overrides it.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match env::var_os(OUT_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output_dir.clone(),
        }
    }
}

//! Core of the thematic-role probing workbench.
//!
//! Everything here is `no_std` + `alloc`: bracketed treebank reading and a
//! small tree-pattern language, the synthetic paradigm generators, a compact
//! masked language model with hand-written backpropagation, the probing
//! metrics, and the model-backend abstraction. File formats, sockets and the
//! command line live in the `rolebench` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod backend;
pub mod mlm;
pub mod paradigm;
pub mod probing;
pub mod rng;
pub mod treebank;

pub use backend::{Backend, BackendError, ToyBackend};
pub use mlm::{Checkpoint, MaskDistribution, ModelConfig, Vocab};
pub use paradigm::{Frame, NounInventory, ProbeSentence, Role, Voice};
pub use treebank::{ExtractedSentence, ParseTree, TreePattern};

//! Wire messages. Every message travels in an [`Envelope`] carrying the
//! protocol version; the `type` field selects the variant.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::mlm::MaskDistribution;
use crate::paradigm::ProbeSentence;
use crate::probing::{FinetuneConfig, TuneTrace};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Query,
    Tune,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hello {
    pub client: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerInfo {
    pub server: String,
    pub capabilities: Vec<Capability>,
    pub vocab_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionRequest {
    pub id: u64,
    /// Tuned session to answer from; the base model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    pub tokens: Vec<String>,
    pub positions: Vec<usize>,
    pub query: Vec<String>,
    #[serde(default)]
    pub top_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionDistribution {
    pub position: usize,
    /// Natural-log probabilities of the queried tokens.
    pub log_probs: BTreeMap<String, f64>,
    /// Entropy of the full output distribution, in nats.
    pub entropy: f64,
    pub top_k: Vec<(String, f64)>,
}

impl From<PositionDistribution> for MaskDistribution {
    fn from(p: PositionDistribution) -> Self {
        MaskDistribution {
            position: p.position,
            log_probs: p.log_probs,
            entropy: Some(p.entropy),
            top_k: p.top_k,
            complete: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionResponse {
    pub id: u64,
    pub positions: Vec<PositionDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRequest {
    pub id: u64,
    pub session: String,
    pub sentences: Vec<ProbeSentence>,
    pub config: FinetuneConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResponse {
    pub id: u64,
    pub session: String,
    pub trace: TuneTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    VersionMismatch,
    UnknownToken,
    MultiPiece,
    UnknownSession,
    NotMasked,
    TooLong,
    NoCapability,
    TuneFailed,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorReply {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    pub code: ErrorCode,
    pub message: String,
    /// Offending tokens for token-level errors.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello(Hello),
    Welcome(ServerInfo),
    Query(DistributionRequest),
    Distribution(DistributionResponse),
    Tune(TuneRequest),
    Tuned(TuneResponse),
    Error(ErrorReply),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub v: u32,
    #[serde(flatten)]
    pub message: Message,
}

impl Envelope {
    pub fn new(message: Message) -> Self {
        Envelope { v: PROTOCOL_VERSION, message }
    }
}

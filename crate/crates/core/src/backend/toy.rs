use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{
    Backend, BackendError, Capability, DistributionRequest, DistributionResponse, ErrorCode, PositionDistribution,
    ServerInfo, TuneRequest, TuneResponse,
};
use crate::mlm::{forward_masked, Checkpoint, MlmError};
use crate::probing::{add_novel_tokens, tune_embeddings, ProbeError};

/// The toy model served in-process. Tuned states live in named sessions
/// derived from the base checkpoint, which itself never changes.
#[derive(Debug, Clone)]
pub struct ToyBackend {
    base: Checkpoint,
    sessions: BTreeMap<String, Checkpoint>,
    tunable: bool,
}

fn server(code: ErrorCode, message: impl ToString) -> BackendError {
    BackendError::Server { code, message: message.to_string(), tokens: Vec::new() }
}

fn from_mlm(e: MlmError) -> BackendError {
    let code = match e {
        MlmError::NotMasked(_) => ErrorCode::NotMasked,
        MlmError::TooLong { .. } => ErrorCode::TooLong,
        MlmError::OutOfRange(_) | MlmError::BadToken(_) => ErrorCode::BadRequest,
        _ => ErrorCode::Internal,
    };
    server(code, e)
}

fn from_probe(e: ProbeError) -> BackendError {
    match e {
        ProbeError::Mlm(m) => from_mlm(m),
        ProbeError::Backend(b) => b,
        ProbeError::MissingTokens(tokens) => {
            BackendError::Server { code: ErrorCode::UnknownToken, message: "tokens not in vocabulary".into(), tokens }
        }
        other => server(ErrorCode::TuneFailed, other),
    }
}

impl ToyBackend {
    pub fn new(base: Checkpoint) -> Self {
        ToyBackend { base, sessions: BTreeMap::new(), tunable: true }
    }

    /// A backend that refuses tune requests.
    pub fn query_only(base: Checkpoint) -> Self {
        ToyBackend { tunable: false, ..Self::new(base) }
    }

    pub fn base(&self) -> &Checkpoint {
        &self.base
    }

    pub fn session(&self, name: &str) -> Option<&Checkpoint> {
        self.sessions.get(name)
    }

    fn checkpoint(&self, session: Option<&str>) -> Result<&Checkpoint, BackendError> {
        match session {
            None => Ok(&self.base),
            Some(s) => self
                .sessions
                .get(s)
                .ok_or_else(|| server(ErrorCode::UnknownSession, alloc::format!("no session '{s}'"))),
        }
    }
}

impl Backend for ToyBackend {
    fn info(&mut self) -> Result<ServerInfo, BackendError> {
        let mut capabilities = alloc::vec![Capability::Query];
        if self.tunable {
            capabilities.push(Capability::Tune);
        }
        Ok(ServerInfo { server: "toy".into(), capabilities, vocab_size: self.base.vocab.len() })
    }

    fn query(&mut self, req: &DistributionRequest) -> Result<DistributionResponse, BackendError> {
        let ck = self.checkpoint(req.session.as_deref())?;
        if req.query.is_empty() {
            return Err(server(ErrorCode::BadRequest, "query token list is empty"));
        }
        let unknown: Vec<String> = req.query.iter().filter(|q| ck.vocab.id(q).is_none()).cloned().collect();
        if !unknown.is_empty() {
            return Err(BackendError::Server {
                code: ErrorCode::UnknownToken,
                message: "query tokens not in vocabulary".into(),
                tokens: unknown,
            });
        }
        let ids = ck.vocab.tokenize_words(&req.tokens);
        let dists = forward_masked(ck, &ids, &req.positions).map_err(from_mlm)?;
        let positions = dists
            .into_iter()
            .map(|d| {
                let r = d.restrict(&req.query, req.top_k);
                PositionDistribution {
                    position: r.position,
                    log_probs: r.log_probs,
                    entropy: r.entropy.unwrap_or(0.0),
                    top_k: r.top_k,
                }
            })
            .collect();
        Ok(DistributionResponse { id: req.id, positions })
    }

    fn tune(&mut self, req: &TuneRequest) -> Result<TuneResponse, BackendError> {
        if !self.tunable {
            return Err(BackendError::Capability(Capability::Tune));
        }
        let cfg = &req.config;
        let names = [cfg.theme_token.as_str(), cfg.recipient_token.as_str()];
        let with_novel = add_novel_tokens(&self.base, names, req.seed).map_err(|e| match e {
            ProbeError::Vocab(v) => server(ErrorCode::BadRequest, v),
            other => from_probe(other),
        })?;
        let (tuned, trace) = tune_embeddings(&with_novel, &req.sentences, cfg).map_err(from_probe)?;
        self.sessions.insert(req.session.clone(), tuned);
        Ok(TuneResponse { id: req.id, session: req.session.clone(), trace })
    }
}

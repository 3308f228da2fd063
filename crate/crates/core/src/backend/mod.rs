//! Model backends: the interface experiments run against, its wire
//! messages, and the in-process toy-model implementation.

mod messages;
mod toy;

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub use messages::{
    Capability, DistributionRequest, DistributionResponse, Envelope, ErrorCode, ErrorReply, Hello, Message,
    PositionDistribution, ServerInfo, TuneRequest, TuneResponse, PROTOCOL_VERSION,
};
pub use toy::ToyBackend;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("protocol version {got}, expected {expected}")]
    Version { expected: u32, got: u32 },
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("server error ({code:?}): {message}")]
    Server { code: ErrorCode, message: String, tokens: Vec<String> },
    #[error("backend lacks the {0:?} capability")]
    Capability(Capability),
}

impl From<ErrorReply> for BackendError {
    fn from(e: ErrorReply) -> Self {
        BackendError::Server { code: e.code, message: e.message, tokens: e.tokens }
    }
}

/// Something that answers distribution queries and, optionally, tunes
/// novel-token embeddings into named sessions.
pub trait Backend {
    fn info(&mut self) -> Result<ServerInfo, BackendError>;

    fn query(&mut self, req: &DistributionRequest) -> Result<DistributionResponse, BackendError>;

    fn tune(&mut self, req: &TuneRequest) -> Result<TuneResponse, BackendError>;
}

impl<B: Backend + ?Sized> Backend for &mut B {
    fn info(&mut self) -> Result<ServerInfo, BackendError> {
        (**self).info()
    }

    fn query(&mut self, req: &DistributionRequest) -> Result<DistributionResponse, BackendError> {
        (**self).query(req)
    }

    fn tune(&mut self, req: &TuneRequest) -> Result<TuneResponse, BackendError> {
        (**self).tune(req)
    }
}

/// Query and verify that the response answers this request.
pub fn query_checked<B: Backend + ?Sized>(
    b: &mut B,
    req: &DistributionRequest,
) -> Result<DistributionResponse, BackendError> {
    let resp = b.query(req)?;
    if resp.id != req.id {
        return Err(BackendError::Protocol(alloc::format!("response id {} for request {}", resp.id, req.id)));
    }
    if resp.positions.len() != req.positions.len()
        || resp.positions.iter().zip(&req.positions).any(|(r, &p)| r.position != p)
    {
        return Err(BackendError::Protocol("response positions do not match the request".into()));
    }
    Ok(resp)
}

/// Tune and verify the response id.
pub fn tune_checked<B: Backend + ?Sized>(b: &mut B, req: &TuneRequest) -> Result<TuneResponse, BackendError> {
    let resp = b.tune(req)?;
    if resp.id != req.id || resp.session != req.session {
        return Err(BackendError::Protocol(alloc::format!(
            "tune response {} does not answer request {}",
            resp.id,
            req.id
        )));
    }
    Ok(resp)
}

/// Server-side dispatch: answer one request message.
pub fn respond<B: Backend + ?Sized>(b: &mut B, msg: Message) -> Message {
    let (id, result) = match msg {
        Message::Hello(_) => (None, b.info().map(Message::Welcome)),
        Message::Query(r) => (Some(r.id), b.query(&r).map(Message::Distribution)),
        Message::Tune(r) => (Some(r.id), b.tune(&r).map(Message::Tuned)),
        other => {
            return Message::Error(ErrorReply {
                id: None,
                code: ErrorCode::BadRequest,
                message: alloc::format!("unexpected {} message", message_type(&other)),
                tokens: Vec::new(),
            })
        }
    };
    result.unwrap_or_else(|e| Message::Error(error_reply(id, e)))
}

/// Map a backend error onto the wire.
pub fn error_reply(id: Option<u64>, e: BackendError) -> ErrorReply {
    use alloc::string::ToString;
    match e {
        BackendError::Server { code, message, tokens } => ErrorReply { id, code, message, tokens },
        BackendError::Capability(_) => {
            ErrorReply { id, code: ErrorCode::NoCapability, message: e.to_string(), tokens: Vec::new() }
        }
        BackendError::Version { .. } => {
            ErrorReply { id, code: ErrorCode::VersionMismatch, message: e.to_string(), tokens: Vec::new() }
        }
        other => ErrorReply { id, code: ErrorCode::Internal, message: other.to_string(), tokens: Vec::new() },
    }
}

pub fn message_type(m: &Message) -> &'static str {
    match m {
        Message::Hello(_) => "hello",
        Message::Welcome(_) => "welcome",
        Message::Query(_) => "query",
        Message::Distribution(_) => "distribution",
        Message::Tune(_) => "tune",
        Message::Tuned(_) => "tuned",
        Message::Error(_) => "error",
    }
}

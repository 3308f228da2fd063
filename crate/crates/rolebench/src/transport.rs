//! Newline-delimited JSON transport: a client that implements [`Backend`]
//! over any byte stream, and a server loop that answers one request line
//! with one response line.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::thread;

use rolebench_core::backend::{
    error_reply, message_type, respond, Backend, BackendError, Capability, DistributionRequest, DistributionResponse,
    Envelope, ErrorCode, ErrorReply, Hello, Message, ServerInfo, TuneRequest, TuneResponse, PROTOCOL_VERSION,
};

pub fn encode(m: &Message) -> String {
    serde_json::to_string(&Envelope::new(m.clone())).expect("messages always serialize")
}

/// Parse one line. The version is checked before the message body, so a
/// peer speaking another version gets a version error rather than a parse
/// error.
pub fn decode(line: &str) -> Result<Message, BackendError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| BackendError::Protocol(format!("invalid JSON: {e}")))?;
    match value.get("v").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(PROTOCOL_VERSION) => {}
        Some(v) => return Err(BackendError::Version { expected: PROTOCOL_VERSION, got: v as u32 }),
        None => return Err(BackendError::Protocol("missing version field".into())),
    }
    // Decoding from the string rather than the Value keeps floats exact.
    let env: Envelope = serde_json::from_str(line).map_err(|e| BackendError::Protocol(format!("bad message: {e}")))?;
    Ok(env.message)
}

fn transport(e: io::Error) -> BackendError {
    BackendError::Transport(e.to_string())
}

pub struct NdjsonClient<R, W> {
    reader: R,
    writer: W,
    info: Option<ServerInfo>,
    line: String,
}

impl NdjsonClient<BufReader<TcpStream>, TcpStream> {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, BackendError> {
        let stream = TcpStream::connect(addr).map_err(transport)?;
        stream.set_nodelay(true).map_err(transport)?;
        let reader = BufReader::new(stream.try_clone().map_err(transport)?);
        Ok(NdjsonClient::new(reader, stream))
    }
}

impl<R: BufRead, W: Write> NdjsonClient<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        NdjsonClient { reader, writer, info: None, line: String::new() }
    }

    /// Send one message and read the reply. Server errors come back as
    /// [`BackendError::Server`].
    pub fn call(&mut self, msg: &Message) -> Result<Message, BackendError> {
        let mut out = encode(msg);
        out.push('\n');
        self.writer.write_all(out.as_bytes()).map_err(transport)?;
        self.writer.flush().map_err(transport)?;
        self.line.clear();
        if self.reader.read_line(&mut self.line).map_err(transport)? == 0 {
            return Err(BackendError::Transport("connection closed".into()));
        }
        match decode(self.line.trim_end())? {
            Message::Error(e) => Err(e.into()),
            m => Ok(m),
        }
    }
}

fn unexpected(want: &str, got: &Message) -> BackendError {
    BackendError::Protocol(format!("expected a {want} message, got {}", message_type(got)))
}

impl<R: BufRead, W: Write> Backend for NdjsonClient<R, W> {
    fn info(&mut self) -> Result<ServerInfo, BackendError> {
        if let Some(i) = &self.info {
            return Ok(i.clone());
        }
        let hello = Message::Hello(Hello { client: format!("rolebench {}", env!("CARGO_PKG_VERSION")) });
        match self.call(&hello)? {
            Message::Welcome(i) => {
                self.info = Some(i.clone());
                Ok(i)
            }
            m => Err(unexpected("welcome", &m)),
        }
    }

    fn query(&mut self, req: &DistributionRequest) -> Result<DistributionResponse, BackendError> {
        match self.call(&Message::Query(req.clone()))? {
            Message::Distribution(d) => Ok(d),
            m => Err(unexpected("distribution", &m)),
        }
    }

    fn tune(&mut self, req: &TuneRequest) -> Result<TuneResponse, BackendError> {
        if self.info.as_ref().is_some_and(|i| !i.capabilities.contains(&Capability::Tune)) {
            return Err(BackendError::Capability(Capability::Tune));
        }
        match self.call(&Message::Tune(req.clone())) {
            Ok(Message::Tuned(t)) => Ok(t),
            Ok(m) => Err(unexpected("tuned", &m)),
            Err(BackendError::Server { code: ErrorCode::NoCapability, .. }) => {
                Err(BackendError::Capability(Capability::Tune))
            }
            Err(e) => Err(e),
        }
    }
}

/// Answer request lines until the reader is exhausted.
pub fn serve_stream<B, R, W>(backend: &mut B, reader: R, mut writer: W) -> io::Result<()>
where
    B: Backend + ?Sized,
    R: BufRead,
    W: Write,
{
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match decode(&line) {
            Ok(m) => respond(backend, m),
            Err(BackendError::Protocol(message)) => {
                Message::Error(ErrorReply { id: None, code: ErrorCode::BadRequest, message, tokens: Vec::new() })
            }
            Err(e) => Message::Error(error_reply(None, e)),
        };
        let mut out = encode(&reply);
        out.push('\n');
        writer.write_all(out.as_bytes())?;
        writer.flush()?;
    }
    Ok(())
}

/// Accept connections forever, one thread per connection. Each connection
/// works on its own clone of `base`, so tuned sessions never leak between
/// clients.
pub fn serve_tcp<B>(listener: TcpListener, base: B) -> io::Result<()>
where
    B: Backend + Clone + Send + 'static,
{
    for stream in listener.incoming() {
        let stream = stream?;
        let mut backend = base.clone();
        thread::spawn(move || {
            let _ = stream.set_nodelay(true);
            let Ok(reader) = stream.try_clone() else { return };
            let _ = serve_stream(&mut backend, BufReader::new(reader), stream);
        });
    }
    Ok(())
}

/// Bind `addr` and serve on a background thread; returns the bound address.
pub fn spawn_server<B>(addr: impl ToSocketAddrs, base: B) -> io::Result<std::net::SocketAddr>
where
    B: Backend + Clone + Send + 'static,
{
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    thread::spawn(move || serve_tcp(listener, base));
    Ok(local)
}

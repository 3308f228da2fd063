//! Little-endian checkpoint container.
//!
//! ```text
//! magic    8 bytes  "RBCKPT\0\0"
//! version  u32
//! length   u64      byte length of the body
//! body:
//!   config   u32 n_layers, n_heads, d_model, d_ff, max_len, vocab_size
//!            f32 dropout, u64 seed
//!   meta     u64 steps, seed, corpus_hash
//!   tensors  u32 count, then per tensor:
//!            u32 name length, name (UTF-8), u32 rank, u32 dims, f32 values
//!   vocab    u32 n_base, u32 count, then per token: u32 length, UTF-8 bytes
//! crc32    u32      IEEE CRC-32 of the body
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use rolebench_core::mlm::{tensor_shapes, MlmError, Params, TrainMeta, VocabError};
use rolebench_core::{Checkpoint, ModelConfig, Vocab};
use thiserror::Error;

pub const MAGIC: [u8; 8] = *b"RBCKPT\0\0";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a checkpoint file")]
    Magic,
    #[error("checkpoint format version {0}, this build reads version {FORMAT_VERSION}")]
    Version(u32),
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Model(#[from] MlmError),
}

fn put_u32(b: &mut Vec<u8>, v: u32) {
    b.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(b: &mut Vec<u8>, v: u64) {
    b.extend_from_slice(&v.to_le_bytes());
}

fn put_str(b: &mut Vec<u8>, s: &str) {
    put_u32(b, s.len() as u32);
    b.extend_from_slice(s.as_bytes());
}

fn to_u32(n: usize, what: &str) -> Result<u32, CheckpointError> {
    u32::try_from(n).map_err(|_| CheckpointError::Malformed(format!("{what} {n} does not fit in u32")))
}

pub fn to_bytes(ck: &Checkpoint) -> Result<Vec<u8>, CheckpointError> {
    ck.validate()?;
    let c = &ck.config;
    let mut body = Vec::new();
    for (v, what) in [
        (c.n_layers, "n_layers"),
        (c.n_heads, "n_heads"),
        (c.d_model, "d_model"),
        (c.d_ff, "d_ff"),
        (c.max_len, "max_len"),
        (c.vocab_size, "vocab_size"),
    ] {
        put_u32(&mut body, to_u32(v, what)?);
    }
    body.extend_from_slice(&c.dropout.to_le_bytes());
    put_u64(&mut body, c.seed);
    put_u64(&mut body, ck.meta.steps);
    put_u64(&mut body, ck.meta.seed);
    put_u64(&mut body, ck.meta.corpus_hash);

    let shapes = tensor_shapes(c);
    let named = ck.params.named();
    put_u32(&mut body, to_u32(named.len(), "tensor count")?);
    for ((name, data), (_, shape)) in named.iter().zip(&shapes) {
        put_str(&mut body, name);
        put_u32(&mut body, shape.len() as u32);
        for &d in shape {
            put_u32(&mut body, to_u32(d, "dimension")?);
        }
        for x in data.iter() {
            body.extend_from_slice(&x.to_le_bytes());
        }
    }

    put_u32(&mut body, to_u32(ck.vocab.n_base(), "n_base")?);
    put_u32(&mut body, to_u32(ck.vocab.len(), "vocab length")?);
    for t in ck.vocab.tokens() {
        put_str(&mut body, t);
    }

    let mut out = Vec::with_capacity(HEADER_LEN + body.len() + 4);
    out.extend_from_slice(&MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    put_u64(&mut out, body.len() as u64);
    let crc = crc32fast::hash(&body);
    out.extend_from_slice(&body);
    put_u32(&mut out, crc);
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(CheckpointError::Truncated)?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize, CheckpointError> {
        Ok(self.u32()? as usize)
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, CheckpointError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, CheckpointError> {
        let n = self.usize()?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| CheckpointError::Malformed("token is not UTF-8".into()))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::Magic);
    }
    let mut head = Cursor { buf: bytes, pos: MAGIC.len() };
    let version = head.u32()?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Version(version));
    }
    let body_len = usize::try_from(head.u64()?).map_err(|_| CheckpointError::Truncated)?;
    let body = head.take(body_len)?;
    let stored = head.u32()?;
    if head.pos != bytes.len() {
        return Err(CheckpointError::Malformed(format!("{} trailing bytes", bytes.len() - head.pos)));
    }
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(CheckpointError::Checksum { stored, computed });
    }

    let mut c = Cursor { buf: body, pos: 0 };
    let config = ModelConfig {
        n_layers: c.usize()?,
        n_heads: c.usize()?,
        d_model: c.usize()?,
        d_ff: c.usize()?,
        max_len: c.usize()?,
        vocab_size: c.usize()?,
        dropout: c.f32()?,
        seed: c.u64()?,
    };
    config.validate().map_err(MlmError::from)?;
    let meta = TrainMeta { steps: c.u64()?, seed: c.u64()?, corpus_hash: c.u64()? };

    let shapes = tensor_shapes(&config);
    let count = c.usize()?;
    if count != shapes.len() {
        return Err(CheckpointError::Malformed(format!("{count} tensors, config implies {}", shapes.len())));
    }
    let mut tensors = Vec::with_capacity(count);
    for (want_name, want_shape) in &shapes {
        let name = c.string()?;
        let rank = c.usize()?;
        let shape = (0..rank).map(|_| c.usize()).collect::<Result<Vec<_>, _>>()?;
        if &name != want_name || &shape != want_shape {
            return Err(CheckpointError::Malformed(format!(
                "tensor {name} {shape:?}, expected {want_name} {want_shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| c.f32()).collect::<Result<Vec<_>, _>>()?;
        tensors.push(data);
    }
    let params =
        Params::from_tensors(&config, tensors).ok_or_else(|| CheckpointError::Malformed("tensor shapes".into()))?;

    let n_base = c.usize()?;
    let n_tokens = c.usize()?;
    let tokens = (0..n_tokens).map(|_| c.string()).collect::<Result<Vec<_>, _>>()?;
    let vocab = Vocab::from_parts(tokens, n_base)?;
    if c.pos != body.len() {
        return Err(CheckpointError::Malformed("unread bytes after vocabulary".into()));
    }

    let ck = Checkpoint { config, params, vocab, meta };
    ck.validate()?;
    Ok(ck)
}

pub fn save(ck: &Checkpoint, mut w: impl Write) -> Result<(), CheckpointError> {
    w.write_all(&to_bytes(ck)?)?;
    Ok(())
}

pub fn load(mut r: impl Read) -> Result<Checkpoint, CheckpointError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}

pub fn save_file(ck: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    fs::write(path, to_bytes(ck)?)?;
    Ok(())
}

pub fn load_file(path: &Path) -> Result<Checkpoint, CheckpointError> {
    from_bytes(&fs::read(path)?)
}

//! Binary checkpoint container.
//!
//! Layout (little-endian): magic `ACCORDLM`, `u32` version, `u32`-prefixed
//! config JSON, `u32`-prefixed vocabulary hash, `u8` element width, `u32`
//! tensor count, then per tensor a `u16`-prefixed name, `u8` rank, `u64`
//! dims and the raw values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{LmError, ModelConfig, Params, Scalar, TransformerLM};

const MAGIC: &[u8; 8] = b"ACCORDLM";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<F> {
    pub model: TransformerLM<F>,
    /// Content hash of the vocabulary the model was trained with.
    pub vocab_hash: String,
}

fn err(m: impl Into<String>) -> LmError {
    LmError::Checkpoint(m.into())
}

pub fn write_checkpoint<W: Write, F: Scalar>(
    out: &mut W,
    model: &TransformerLM<F>,
    vocab_hash: &str,
) -> Result<(), LmError> {
    let config = serde_json::to_vec(&model.config).map_err(|e| err(e.to_string()))?;
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(config.len() as u32).to_le_bytes());
    buf.extend_from_slice(&config);
    buf.extend_from_slice(&(vocab_hash.len() as u32).to_le_bytes());
    buf.extend_from_slice(vocab_hash.as_bytes());
    buf.push(F::WIDTH);
    let tensors = model.params.tensors();
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, shape, data) in tensors {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.push(shape.len() as u8);
        for d in shape {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &x in data {
            x.write_le(&mut buf);
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>, LmError> {
        let mut b = vec![0; n];
        self.inner.read_exact(&mut b).map_err(|e| err(format!("truncated file: {e}")))?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8, LmError> {
        Ok(self.bytes(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, LmError> {
        Ok(u16::from_le_bytes(self.bytes(2)?.try_into().expect("2 bytes")))
    }
    fn u32(&mut self) -> Result<u32, LmError> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, LmError> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().expect("8 bytes")))
    }
    fn string(&mut self, n: usize) -> Result<String, LmError> {
        String::from_utf8(self.bytes(n)?).map_err(|_| err("non-UTF-8 string"))
    }
}

/// Reads a checkpoint, converting values to `F` if stored at another width.
/// Tensor names and shapes must match what the stored config implies.
pub fn read_checkpoint<R: Read, F: Scalar>(input: R) -> Result<Checkpoint<F>, LmError> {
    let mut r = Reader { inner: input };
    if r.bytes(MAGIC.len())? != MAGIC {
        return Err(err("not an accord checkpoint (bad magic)"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(err(format!("unsupported version {version}")));
    }
    let n = r.u32()? as usize;
    let config: ModelConfig = serde_json::from_slice(&r.bytes(n)?).map_err(|e| err(format!("config: {e}")))?;
    config.validate()?;
    let n = r.u32()? as usize;
    let vocab_hash = r.string(n)?;
    let width = r.u8()?;
    if width != 4 && width != 8 {
        return Err(err(format!("unknown element width {width}")));
    }
    let mut params = Params::<F>::zeros(&config);
    let expected: Vec<(String, Vec<usize>)> = params.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
    let count = r.u32()? as usize;
    if count != expected.len() {
        return Err(err(format!("expected {} tensors, found {count}", expected.len())));
    }
    let mut slots = params.tensors_mut();
    for ((want_name, want_shape), slot) in expected.iter().zip(slots.iter_mut()) {
        let n = r.u16()? as usize;
        let name = r.string(n)?;
        if &name != want_name {
            return Err(err(format!("expected tensor {want_name}, found {name}")));
        }
        let rank = r.u8()? as usize;
        let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        if &shape != want_shape {
            return Err(err(format!("tensor {name}: shape {shape:?} does not match config {want_shape:?}")));
        }
        let raw = r.bytes(slot.len() * width as usize)?;
        for (x, chunk) in slot.iter_mut().zip(raw.chunks_exact(width as usize)) {
            *x = if width == F::WIDTH {
                F::read_le(chunk)
            } else if width == 4 {
                F::of(f32::read_le(chunk) as f64)
            } else {
                F::of(f64::read_le(chunk))
            };
        }
    }
    drop(slots);
    let mut rest = Vec::new();
    r.inner.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(err(format!("{} trailing bytes", rest.len())));
    }
    Ok(Checkpoint { model: TransformerLM::from_params(config, params), vocab_hash })
}

pub fn save_checkpoint<F: Scalar>(path: &Path, model: &TransformerLM<F>, vocab_hash: &str) -> Result<(), LmError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, model, vocab_hash)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint<F: Scalar>(path: &Path) -> Result<Checkpoint<F>, LmError> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

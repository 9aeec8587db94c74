//! Versioned binary checkpoint: named tensors with shapes, RNG provenance
//! and the optimizer step. Raw little-endian float bits, so round trips are
//! exact at either precision.

use std::fs;
use std::path::Path;

use super::params::{ModelDims, ModelParams, ParamSet};
use super::Real;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"GFCKPT01";

/// A model checkpoint plus the RNG provenance of the run that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub model: ModelParams<T>,
    pub seed: u64,
    /// `(stream id, word position)` pairs of the training streams at save time.
    pub rng_positions: Vec<(u8, u128)>,
}

fn push_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn push_u64(out: &mut Vec<u8>, x: u64) {
    out.extend_from_slice(&x.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.bytes.len() {
            return Err(Error::Parse { line: 0, msg: "truncated checkpoint".into() });
        }
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }
}

fn encode_set<T: Real>(out: &mut Vec<u8>, set: &ParamSet<T>, prefix: &str) {
    let tensors = set.tensors();
    for (meta, xs) in tensors {
        let name = format!("{prefix}{}", meta.name);
        push_u32(out, name.len() as u32);
        out.extend_from_slice(name.as_bytes());
        push_u32(out, xs.len() as u32);
        for &x in xs {
            x.write_le(out);
        }
    }
}

/// Serialize a checkpoint to bytes.
pub fn checkpoint_bytes<T: Real>(ck: &Checkpoint<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(T::BITS);
    push_u64(&mut out, ck.model.step);
    push_u64(&mut out, ck.seed);
    out.push(ck.rng_positions.len() as u8);
    for &(id, pos) in &ck.rng_positions {
        out.push(id);
        out.extend_from_slice(&pos.to_le_bytes());
    }
    let dims = ck.model.dims();
    push_u32(&mut out, dims.input_dim as u32);
    push_u32(&mut out, dims.hidden_dim as u32);
    push_u32(&mut out, dims.synth_heads as u32);
    let n_tensors = ck.model.params.tensors().len() as u32 * 3;
    push_u32(&mut out, n_tensors);
    encode_set(&mut out, &ck.model.params, "");
    encode_set(&mut out, &ck.model.adam_m, "adam_m.");
    encode_set(&mut out, &ck.model.adam_v, "adam_v.");
    out
}

pub fn save_checkpoint<T: Real>(ck: &Checkpoint<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path.as_ref(), checkpoint_bytes(ck))?;
    Ok(())
}

fn decode_into<T: Real>(
    reader: &mut Reader<'_>,
    set: &mut ParamSet<T>,
    prefix: &str,
) -> Result<()> {
    let mut tensors = set.tensors_mut();
    for (meta, xs) in tensors.iter_mut() {
        let name_len = reader.u32()? as usize;
        let name = std::str::from_utf8(reader.take(name_len)?)
            .map_err(|_| Error::Parse { line: 0, msg: "bad tensor name".into() })?;
        let expect = format!("{prefix}{}", meta.name);
        if name != expect {
            return Err(Error::Parse {
                line: 0,
                msg: format!("tensor order mismatch: found {name}, expected {expect}"),
            });
        }
        let len = reader.u32()? as usize;
        if len != xs.len() {
            return Err(Error::Parse {
                line: 0,
                msg: format!("tensor {name} has {len} values, expected {}", xs.len()),
            });
        }
        let raw = reader.take(len * T::BYTE_WIDTH)?;
        for (i, x) in xs.iter_mut().enumerate() {
            *x = T::read_le(&raw[i * T::BYTE_WIDTH..]);
        }
    }
    Ok(())
}

/// Deserialize checkpoint bytes at precision `T`; the stored precision must match.
pub fn checkpoint_from_bytes<T: Real>(bytes: &[u8]) -> Result<Checkpoint<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Parse { line: 0, msg: "not a checkpoint file".into() });
    }
    let bits = r.take(1)?[0];
    if bits != T::BITS {
        return Err(Error::Parse {
            line: 0,
            msg: format!("checkpoint precision is {bits}-bit, loader expects {}-bit", T::BITS),
        });
    }
    let step = r.u64()?;
    let seed = r.u64()?;
    let n_streams = r.take(1)?[0] as usize;
    let mut rng_positions = Vec::with_capacity(n_streams);
    for _ in 0..n_streams {
        let id = r.take(1)?[0];
        rng_positions.push((id, r.u128()?));
    }
    let dims = ModelDims {
        input_dim: r.u32()? as usize,
        hidden_dim: r.u32()? as usize,
        synth_heads: r.u32()? as usize,
    };
    let _n_tensors = r.u32()?;
    let mut model = ModelParams {
        params: ParamSet::zeros(&dims),
        adam_m: ParamSet::zeros(&dims),
        adam_v: ParamSet::zeros(&dims),
        step,
    };
    decode_into(&mut r, &mut model.params, "")?;
    decode_into(&mut r, &mut model.adam_m, "adam_m.")?;
    decode_into(&mut r, &mut model.adam_v, "adam_v.")?;
    Ok(Checkpoint { model, seed, rng_positions })
}

pub fn load_checkpoint<T: Real>(path: impl AsRef<Path>) -> Result<Checkpoint<T>> {
    let bytes = fs::read(path.as_ref())?;
    checkpoint_from_bytes(&bytes)
}

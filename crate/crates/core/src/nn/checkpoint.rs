//! SINGCKPT: `SINGCKPT`, u32 version, u32 tensor count, then per tensor
//! u32 name length, UTF-8 name, u32 rows, u32 cols and row-major f64 values,
//! all little-endian. Adam moments live under `adam.m/<name>` and
//! `adam.v/<name>`; the step counter is the 1×1 tensor `adam.step`.

use std::path::Path;

use crate::error::{Error, Result};

use super::params::ParamSet;
use super::tensor::Tensor2;

pub const CKPT_MAGIC: &[u8; 8] = b"SINGCKPT";
pub const CKPT_VERSION: u32 = 1;
const M_PREFIX: &str = "adam.m/";
const V_PREFIX: &str = "adam.v/";
const STEP_NAME: &str = "adam.step";

fn push_tensor(out: &mut Vec<u8>, name: &str, t: &Tensor2) {
    out.extend_from_slice(&(name.len() as u32).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.extend_from_slice(&(t.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(t.cols() as u32).to_le_bytes());
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_checkpoint(params: &ParamSet) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CKPT_MAGIC);
    out.extend_from_slice(&CKPT_VERSION.to_le_bytes());
    out.extend_from_slice(&((3 * params.len() + 1) as u32).to_le_bytes());
    for p in params.iter() {
        push_tensor(&mut out, &p.name, &p.value);
    }
    for p in params.iter() {
        push_tensor(&mut out, &format!("{M_PREFIX}{}", p.name), &p.m);
    }
    for p in params.iter() {
        push_tensor(&mut out, &format!("{V_PREFIX}{}", p.name), &p.v);
    }
    let step = Tensor2::from_vec(1, 1, vec![params.step as f64]).expect("1x1");
    push_tensor(&mut out, STEP_NAME, &step);
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format("SINGCKPT", format!("truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ParamSet> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != CKPT_MAGIC {
        return Err(Error::format("SINGCKPT", "missing SINGCKPT magic"));
    }
    let version = c.u32()?;
    if version != CKPT_VERSION {
        return Err(Error::format("SINGCKPT", format!("unsupported version {version}")));
    }
    let count = c.u32()? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let len = c.u32()? as usize;
        let name = std::str::from_utf8(c.take(len)?)
            .map_err(|_| Error::format("SINGCKPT", "tensor name is not UTF-8"))?
            .to_string();
        let rows = c.u32()? as usize;
        let cols = c.u32()? as usize;
        let raw = c.take(8 * rows * cols)?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        tensors.push((name, Tensor2::from_vec(rows, cols, data)?));
    }
    if c.pos != bytes.len() {
        return Err(Error::format("SINGCKPT", "trailing bytes"));
    }

    let mut params = ParamSet::new();
    let mut moments = Vec::new();
    for (name, t) in tensors {
        if name == STEP_NAME {
            params.step = t.data().first().copied().unwrap_or(0.0) as u64;
        } else if name.starts_with(M_PREFIX) || name.starts_with(V_PREFIX) {
            moments.push((name, t));
        } else {
            params.add(name, t);
        }
    }
    for (name, t) in moments {
        let (is_m, base) = match name.strip_prefix(M_PREFIX) {
            Some(b) => (true, b),
            None => (false, &name[V_PREFIX.len()..]),
        };
        let id = params
            .id(base)
            .ok_or_else(|| Error::format("SINGCKPT", format!("moment for unknown tensor {base}")))?;
        let p = params.param_mut(id);
        if p.value.shape() != t.shape() {
            return Err(Error::format("SINGCKPT", format!("moment shape mismatch for {base}")));
        }
        if is_m {
            p.m = t;
        } else {
            p.v = t;
        }
    }
    Ok(params)
}

pub fn write_checkpoint(path: &Path, params: &ParamSet) -> Result<()> {
    std::fs::write(path, encode_checkpoint(params)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<ParamSet> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

//! PRoll container: `SINGPR1\0`, u32 LE sample count, u32 LE pitch count
//! (always 128), f64 LE tempo, then sample-major 0/1 bytes.

use std::path::Path;

use crate::error::{Error, Result};

use super::roll::{PianoRoll, N_PITCHES};

pub const PROLL_MAGIC: &[u8; 8] = b"SINGPR1\0";

pub fn encode_proll(roll: &PianoRoll) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + roll.data().len());
    out.extend_from_slice(PROLL_MAGIC);
    out.extend_from_slice(&(roll.n_samples() as u32).to_le_bytes());
    out.extend_from_slice(&(N_PITCHES as u32).to_le_bytes());
    out.extend_from_slice(&roll.tempo().to_le_bytes());
    out.extend_from_slice(roll.data());
    out
}

pub fn decode_proll(bytes: &[u8]) -> Result<PianoRoll> {
    if bytes.len() < 24 || &bytes[..8] != PROLL_MAGIC {
        return Err(Error::format("PRoll", "missing SINGPR1 magic"));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let pitches = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let tempo = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    if pitches != N_PITCHES {
        return Err(Error::format("PRoll", format!("{pitches} pitches, expected 128")));
    }
    let body = &bytes[24..];
    if body.len() != n * N_PITCHES {
        return Err(Error::format(
            "PRoll",
            format!("{} data bytes for {n} samples", body.len()),
        ));
    }
    PianoRoll::from_data(n, body.to_vec(), tempo)
}

pub fn write_proll(path: &Path, roll: &PianoRoll) -> Result<()> {
    std::fs::write(path, encode_proll(roll)).map_err(|e| Error::io(path, e))
}

pub fn read_proll(path: &Path) -> Result<PianoRoll> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(decode_proll(&bytes)?.with_source_id(id))
}

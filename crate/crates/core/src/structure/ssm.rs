use std::path::Path;

use crate::error::{Error, Result};

use super::chroma::{ChromaSequence, N_CLASSES};

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Shape(format!("{} entries for {n}x{n}", data.len())));
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsmRole {
    Template,
    Generated,
}

/// Pairwise cosine similarities between the chroma columns of a piece.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarityMatrix {
    pub values: SquareMatrix,
    pub role: SsmRole,
}

impl SelfSimilarityMatrix {
    pub fn new(values: SquareMatrix, role: SsmRole) -> Self {
        Self { values, role }
    }

    pub fn n(&self) -> usize {
        self.values.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    pub fn with_role(mut self, role: SsmRole) -> Self {
        self.role = role;
        self
    }
}

/// Cosine-similarity matrix over arbitrary nonnegative columns; a zero
/// column has similarity 0 to everything, itself included.
pub fn cosine_matrix(columns: &[[f64; N_CLASSES]]) -> SquareMatrix {
    let n = columns.len();
    let unit: Vec<Option<[f64; N_CLASSES]>> = columns
        .iter()
        .map(|c| {
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            (norm > 0.0).then(|| c.map(|v| v / norm))
        })
        .collect();
    let mut out = SquareMatrix::zeros(n);
    for (i, ui) in unit.iter().enumerate() {
        let Some(ui) = ui else { continue };
        out.set(i, i, 1.0);
        for (j, uj) in unit.iter().enumerate().skip(i + 1) {
            let Some(uj) = uj else { continue };
            let dot: f64 = ui.iter().zip(uj).map(|(a, b)| a * b).sum();
            let v = dot.clamp(0.0, 1.0);
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    out
}

pub fn ssm(chroma: &ChromaSequence) -> SelfSimilarityMatrix {
    SelfSimilarityMatrix::new(cosine_matrix(chroma.columns()), SsmRole::Template)
}

const DEGENERATE_STD: f64 = 1e-12;

/// Zero mean, unit population variance over all n² entries; the all-zero
/// matrix when the input is (numerically) constant.
pub fn standardize(m: &SquareMatrix) -> SquareMatrix {
    let count = m.data.len() as f64;
    if count == 0.0 {
        return m.clone();
    }
    let mean = m.data.iter().sum::<f64>() / count;
    let var = m.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    let std = var.sqrt();
    if std < DEGENERATE_STD {
        return SquareMatrix::zeros(m.n);
    }
    m.map(|v| (v - mean) / std)
}

pub fn mse(a: &SquareMatrix, b: &SquareMatrix) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::Shape(format!("{}x{0} vs {}x{1}", a.n, b.n)));
    }
    if a.n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(sum / a.data.len() as f64)
}

pub fn standardized_mse(template: &SelfSimilarityMatrix, generated: &SelfSimilarityMatrix) -> Result<f64> {
    mse(&standardize(&template.values), &standardize(&generated.values))
}

pub const SSM_MAGIC: &[u8; 8] = b"SINGSSM\0";

/// `SINGSSM\0`, u32 LE n, then n² f32 LE values row-major.
pub fn encode_ssm(m: &SelfSimilarityMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * m.n() * m.n());
    out.extend_from_slice(SSM_MAGIC);
    out.extend_from_slice(&(m.n() as u32).to_le_bytes());
    for &v in m.values.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_ssm(bytes: &[u8]) -> Result<SelfSimilarityMatrix> {
    if bytes.len() < 12 || &bytes[..8] != SSM_MAGIC {
        return Err(Error::format("SINGSSM", "missing SINGSSM magic"));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() != 4 * n * n {
        return Err(Error::format(
            "SINGSSM",
            format!("{} data bytes for n = {n}", body.len()),
        ));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(SelfSimilarityMatrix::new(
        SquareMatrix::from_vec(n, data)?,
        SsmRole::Template,
    ))
}

pub fn write_ssm(path: &Path, m: &SelfSimilarityMatrix) -> Result<()> {
    std::fs::write(path, encode_ssm(m)).map_err(|e| Error::io(path, e))
}

pub fn read_ssm(path: &Path) -> Result<SelfSimilarityMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ssm(&bytes)
}

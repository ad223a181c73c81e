use std::path::Path;

use crate::error::{Error, Result};

use super::ssm::{SelfSimilarityMatrix, SquareMatrix, SsmRole};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub start: usize,
    pub end: usize,
    pub level: f64,
}

/// Hand-built block structure for a synthetic template.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub length: usize,
    pub blocks: Vec<Block>,
    pub background: f64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::invalid("synth spec", "length must be positive"));
        }
        if !(0.0..=1.0).contains(&self.background) {
            return Err(Error::invalid(
                "synth spec",
                format!("background {} outside [0, 1]", self.background),
            ));
        }
        for b in &self.blocks {
            if b.start >= b.end || b.end > self.length {
                return Err(Error::invalid(
                    "synth spec",
                    format!("block {}..{} outside 0..{}", b.start, b.end, self.length),
                ));
            }
            if !(0.0..=1.0).contains(&b.level) {
                return Err(Error::invalid(
                    "synth spec",
                    format!("block level {} outside [0, 1]", b.level),
                ));
            }
        }
        Ok(())
    }

    /// Parse `length=`, `background=` and repeated `block=start,end,level`
    /// lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut length = None;
        let mut background = 0.0;
        let mut blocks = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| Error::Config { line: line_no, reason };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{line}`")))?;
            let value = value.trim();
            match key.trim() {
                "length" => length = Some(value.parse().map_err(|_| bad(format!("bad length `{value}`")))?),
                "background" => background = value.parse().map_err(|_| bad(format!("bad background `{value}`")))?,
                "block" => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err(bad(format!("block needs start,end,level: `{value}`")));
                    }
                    let start = parts[0].parse().map_err(|_| bad(format!("bad start `{}`", parts[0])))?;
                    let end = parts[1].parse().map_err(|_| bad(format!("bad end `{}`", parts[1])))?;
                    let level = parts[2].parse().map_err(|_| bad(format!("bad level `{}`", parts[2])))?;
                    blocks.push(Block { start, end, level });
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let spec = SynthSpec {
            length: length.ok_or_else(|| Error::invalid("synth spec", "missing length"))?,
            blocks,
            background,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("length={}\nbackground={}\n", self.length, self.background);
        for b in &self.blocks {
            out.push_str(&format!("block={},{},{}\n", b.start, b.end, b.level));
        }
        out
    }
}

/// Realize a synthetic SSM: background, then each block in order (later
/// blocks overwrite earlier ones), then a unit diagonal.
pub fn synth_ssm(spec: &SynthSpec) -> Result<SelfSimilarityMatrix> {
    spec.validate()?;
    let n = spec.length;
    let mut m = SquareMatrix::from_fn(n, |_, _| spec.background);
    for b in &spec.blocks {
        for i in b.start..b.end {
            for j in b.start..b.end {
                m.set(i, j, b.level);
            }
        }
    }
    for i in 0..n {
        m.set(i, i, 1.0);
    }
    Ok(SelfSimilarityMatrix::new(m, SsmRole::Template))
}

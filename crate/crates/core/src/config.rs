//! Line-oriented `key = value` configuration covering model, training and
//! batching settings. Blank lines and `#` comments are ignored; unknown keys
//! are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::batching::BatchConfig;
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::training::TrainConfig;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub batch: BatchConfig,
}

pub const KEYS: &[&str] = &[
    "hidden_size",
    "combiner",
    "seed_len",
    "top_k",
    "max_notes",
    "pitch_lo",
    "pitch_hi",
    "attention_enabled",
    "lstm_output_sparsemax",
    "p_feedback",
    "lr",
    "epochs",
    "seed",
    "checkpoint_dir",
    "grid.k",
    "grid.count",
    "grid.max_len",
    "batch.cap",
    "edit.max_fraction",
];

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse `{value}` for {key}"))
}

impl RunConfig {
    /// Defaults overridden by every assignment in `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|reason| Error::Config { line: i + 1, reason })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let (m, t, b) = (&mut self.model, &mut self.train, &mut self.batch);
        match key {
            "hidden_size" => m.hidden_size = parse(key, value)?,
            "combiner" => m.combiner = value.to_string(),
            "seed_len" => m.seed_len = parse(key, value)?,
            "top_k" => m.top_k = parse(key, value)?,
            "max_notes" => m.max_notes = parse(key, value)?,
            "pitch_lo" => m.pitch_lo = parse(key, value)?,
            "pitch_hi" => m.pitch_hi = parse(key, value)?,
            "attention_enabled" => m.attention_enabled = parse(key, value)?,
            "lstm_output_sparsemax" => m.lstm_output_sparsemax = parse(key, value)?,
            "p_feedback" => t.p_feedback = parse(key, value)?,
            "lr" => t.lr = parse(key, value)?,
            "epochs" => t.epochs = parse(key, value)?,
            "seed" => t.seed = parse(key, value)?,
            "checkpoint_dir" => t.checkpoint_dir = Some(PathBuf::from(value)),
            "grid.k" => b.grid_k = parse(key, value)?,
            "grid.count" => b.grid_count = parse(key, value)?,
            "grid.max_len" => b.max_len = parse(key, value)?,
            "batch.cap" => b.batch_cap = parse(key, value)?,
            "edit.max_fraction" => b.max_edit_fraction = parse(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()
    }

    pub fn to_text(&self) -> String {
        let (m, t, b) = (&self.model, &self.train, &self.batch);
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("hidden_size", m.hidden_size.to_string());
        kv("combiner", m.combiner.clone());
        kv("seed_len", m.seed_len.to_string());
        kv("top_k", m.top_k.to_string());
        kv("max_notes", m.max_notes.to_string());
        kv("pitch_lo", m.pitch_lo.to_string());
        kv("pitch_hi", m.pitch_hi.to_string());
        kv("attention_enabled", m.attention_enabled.to_string());
        kv("lstm_output_sparsemax", m.lstm_output_sparsemax.to_string());
        kv("p_feedback", t.p_feedback.to_string());
        kv("lr", t.lr.to_string());
        kv("epochs", t.epochs.to_string());
        kv("seed", t.seed.to_string());
        if let Some(dir) = &t.checkpoint_dir {
            kv("checkpoint_dir", dir.display().to_string());
        }
        kv("grid.k", b.grid_k.to_string());
        kv("grid.count", b.grid_count.to_string());
        kv("grid.max_len", b.max_len.to_string());
        kv("batch.cap", b.batch_cap.to_string());
        kv("edit.max_fraction", b.max_edit_fraction.to_string());
        out
    }
}

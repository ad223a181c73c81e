use crate::error::{Error, Result};
use crate::midi::N_PITCHES;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub hidden_size: usize,
    /// Name of a registered combiner (`dense` or `per_pitch` built in).
    pub combiner: String,
    pub seed_len: usize,
    pub top_k: usize,
    pub max_notes: usize,
    pub pitch_lo: usize,
    pub pitch_hi: usize,
    pub attention_enabled: bool,
    /// Optional sparsemax on the LSTM output before the head or combiner.
    pub lstm_output_sparsemax: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_size: 128,
            combiner: "dense".into(),
            seed_len: 10,
            top_k: 50,
            max_notes: 3,
            pitch_lo: 20,
            pitch_hi: 107,
            attention_enabled: true,
            lstm_output_sparsemax: false,
        }
    }
}

impl ModelConfig {
    pub fn ablated(mut self) -> Self {
        self.attention_enabled = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::invalid("model config", reason));
        if self.hidden_size == 0 {
            return bad("hidden_size must be positive".into());
        }
        if self.seed_len == 0 {
            return bad("seed_len must be positive".into());
        }
        if self.pitch_lo > self.pitch_hi || self.pitch_hi >= N_PITCHES {
            return bad(format!(
                "pitch range {}..={} outside 0..=127",
                self.pitch_lo, self.pitch_hi
            ));
        }
        if self.max_notes == 0 || self.max_notes > self.top_k {
            return bad(format!(
                "need 1 <= max_notes ({}) <= top_k ({})",
                self.max_notes, self.top_k
            ));
        }
        Ok(())
    }

    pub fn allowed_pitches(&self) -> std::ops::RangeInclusive<usize> {
        self.pitch_lo..=self.pitch_hi
    }
}

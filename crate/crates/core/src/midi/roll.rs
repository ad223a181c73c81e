use crate::error::{Error, Result};

use super::smf::{parse_midi, write_format0, NoteEvent, TempoMap, TickNote, Timing};

pub const N_PITCHES: usize = 128;

/// Binary pitch-activation matrix, one 128-pitch sample per beat.
///
/// Stored sample-major: `data[s * 128 + p]` is pitch `p` at sample `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PianoRoll {
    data: Vec<u8>,
    n_samples: usize,
    tempo: f64,
    source_id: String,
}

impl PianoRoll {
    pub fn zeros(n_samples: usize, tempo: f64) -> Result<Self> {
        Self::from_data(n_samples, vec![0; n_samples * N_PITCHES], tempo)
    }

    pub fn from_data(n_samples: usize, data: Vec<u8>, tempo: f64) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::EmptyPiece);
        }
        if !(tempo.is_finite() && tempo > 0.0) {
            return Err(Error::invalid("tempo", format!("{tempo} is not positive")));
        }
        if data.len() != n_samples * N_PITCHES {
            return Err(Error::Shape(format!(
                "roll data has {} bytes, expected {}",
                data.len(),
                n_samples * N_PITCHES
            )));
        }
        if let Some(bad) = data.iter().find(|&&v| v > 1) {
            return Err(Error::invalid("piano roll", format!("entry {bad} is not 0/1")));
        }
        Ok(Self {
            data,
            n_samples,
            tempo,
            source_id: String::new(),
        })
    }

    /// Build from per-sample activation vectors.
    pub fn from_samples<S: AsRef<[u8]>>(samples: &[S], tempo: f64) -> Result<Self> {
        let mut data = Vec::with_capacity(samples.len() * N_PITCHES);
        for s in samples {
            let s = s.as_ref();
            if s.len() != N_PITCHES {
                return Err(Error::Shape(format!("sample has {} pitches", s.len())));
            }
            data.extend_from_slice(s);
        }
        Self::from_data(samples.len(), data, tempo)
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn tempo(&self) -> f64 {
        self.tempo
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn sample(&self, s: usize) -> &[u8] {
        &self.data[s * N_PITCHES..(s + 1) * N_PITCHES]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[u8]> {
        self.data.chunks_exact(N_PITCHES)
    }

    pub fn get(&self, pitch: usize, s: usize) -> bool {
        self.data[s * N_PITCHES + pitch] != 0
    }

    pub fn set(&mut self, pitch: usize, s: usize, on: bool) {
        self.data[s * N_PITCHES + pitch] = on as u8;
    }

    pub fn active_pitches(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.sample(s)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(p, _)| p)
    }

    /// Copy of samples `start..start + len`.
    pub fn segment(&self, start: usize, len: usize) -> Result<PianoRoll> {
        if start + len > self.n_samples {
            return Err(Error::Shape(format!(
                "segment {start}..{} exceeds {} samples",
                start + len,
                self.n_samples
            )));
        }
        let data = self.data[start * N_PITCHES..(start + len) * N_PITCHES].to_vec();
        Ok(Self::from_data(len, data, self.tempo)?.with_source_id(self.source_id.clone()))
    }

    /// Truncate trailing samples or append silent ones to reach `len`.
    pub fn resized(&self, len: usize) -> Result<PianoRoll> {
        let mut data = self.data.clone();
        data.resize(len * N_PITCHES, 0);
        Ok(Self::from_data(len, data, self.tempo)?.with_source_id(self.source_id.clone()))
    }
}

pub fn sample_period(tempo: f64) -> f64 {
    60.0 / tempo
}

/// Smallest `n` with `n * period >= t`, evaluated with the same products
/// used for the sampling instants so round trips stay exact.
fn samples_to_cover(t: f64, period: f64) -> usize {
    let mut n = (t / period).ceil().max(0.0) as usize;
    while n > 0 && (n - 1) as f64 * period >= t {
        n -= 1;
    }
    while (n as f64) * period < t {
        n += 1;
    }
    n
}

fn fill(events: &[NoteEvent], period: f64, n: usize) -> Result<PianoRoll> {
    let mut roll = PianoRoll::zeros(n, 60.0 / period)?;
    for e in events {
        if e.pitch as usize >= N_PITCHES {
            return Err(Error::invalid("note", format!("pitch {}", e.pitch)));
        }
        let first = ((e.onset / period).floor() as i64 - 1).max(0) as usize;
        for s in first..n {
            let instant = s as f64 * period;
            if instant >= e.offset {
                break;
            }
            if e.onset <= instant {
                roll.set(e.pitch as usize, s, true);
            }
        }
    }
    Ok(roll)
}

/// Sample note events at instants `s * 60 / tempo`; a pitch is on at an
/// instant when some note satisfies `onset <= instant < offset`.
pub fn to_piano_roll(events: &[NoteEvent], tempo: f64) -> Result<PianoRoll> {
    if events.is_empty() {
        return Err(Error::EmptyPiece);
    }
    to_piano_roll_spanning(events, tempo, 0.0)
}

/// Like [`to_piano_roll`] but the roll also covers `duration` seconds, so
/// trailing silence (for instance up to an end-of-track marker) survives.
pub fn to_piano_roll_spanning(events: &[NoteEvent], tempo: f64, duration: f64) -> Result<PianoRoll> {
    if !(tempo.is_finite() && tempo > 0.0) {
        return Err(Error::invalid("tempo", format!("{tempo} is not positive")));
    }
    let period = sample_period(tempo);
    let last = events.iter().map(|e| e.offset).fold(duration, f64::max);
    let n = samples_to_cover(last, period);
    if n == 0 {
        return Err(Error::EmptyPiece);
    }
    let mut roll = fill(events, period, n)?;
    roll.tempo = tempo;
    Ok(roll)
}

pub const WRITE_TICKS_PER_QUARTER: u16 = 960;
pub const WRITE_VELOCITY: u8 = 80;

/// Encode a roll as a format-0 file, one note per maximal run of 1s.
///
/// One sample is (to microsecond tempo resolution) one quarter note. Note
/// boundaries are placed on the last tick at or before each sample instant,
/// so re-sampling at the same tempo recovers the roll exactly.
pub fn to_midi(roll: &PianoRoll, tempo: f64) -> Vec<u8> {
    let us_per_quarter = (60e6 / tempo).round().clamp(1.0, 16_777_215.0) as u32;
    let map = TempoMap::new(
        Timing::Metrical {
            ticks_per_quarter: WRITE_TICKS_PER_QUARTER,
        },
        &[(0, us_per_quarter)],
    );
    let period = sample_period(tempo);
    let tick_of = |s: usize| map.tick_at_or_before(s as f64 * period);
    let n = roll.n_samples();
    let mut notes = Vec::new();
    for pitch in 0..N_PITCHES {
        let mut s = 0;
        while s < n {
            if !roll.get(pitch, s) {
                s += 1;
                continue;
            }
            let start = s;
            while s < n && roll.get(pitch, s) {
                s += 1;
            }
            notes.push(TickNote {
                pitch: pitch as u8,
                on: tick_of(start),
                off: tick_of(s),
                velocity: WRITE_VELOCITY,
            });
        }
    }
    write_format0(WRITE_TICKS_PER_QUARTER, us_per_quarter, &notes, tick_of(n))
}

/// Parse MIDI bytes into a roll at a fixed tempo, keeping trailing silence
/// up to the end of the longest track.
pub fn midi_to_roll(bytes: &[u8], tempo: f64) -> Result<PianoRoll> {
    let parsed = parse_midi(bytes)?;
    to_piano_roll_spanning(&parsed.notes, tempo, parsed.end_seconds)
}

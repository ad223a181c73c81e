//! MIDI ingestion and piano-roll conversion.

mod proll;
mod roll;
mod smf;
mod tempo;

pub use proll::{decode_proll, encode_proll, read_proll, write_proll, PROLL_MAGIC};
pub use roll::{
    midi_to_roll, sample_period, to_midi, to_piano_roll, to_piano_roll_spanning, PianoRoll, N_PITCHES,
    WRITE_TICKS_PER_QUARTER, WRITE_VELOCITY,
};
pub use smf::{parse_midi, write_format0, NoteEvent, ParsedMidi, TempoMap, TickNote, Timing, DEFAULT_US_PER_QUARTER};
pub use tempo::{estimate_tempo, FALLBACK_TEMPO, MAX_TEMPO, MIN_TEMPO};

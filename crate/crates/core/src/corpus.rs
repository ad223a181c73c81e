//! Pieces on disk: preprocessing MIDI into rolls and templates, and loading
//! directories of `.proll` / `.ssm` files.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::midi::{estimate_tempo, parse_midi, read_proll, to_piano_roll, PianoRoll};
use crate::structure::{read_ssm, roll_ssm, SelfSimilarityMatrix};

pub const ROLL_EXT: &str = "proll";
pub const SSM_EXT: &str = "ssm";

/// A roll together with the template describing its structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub id: String,
    pub roll: PianoRoll,
    pub template: SelfSimilarityMatrix,
}

impl Piece {
    /// Uses the roll's own SSM as template.
    pub fn new(id: impl Into<String>, roll: PianoRoll) -> Self {
        let template = roll_ssm(&roll);
        Self {
            id: id.into(),
            roll,
            template,
        }
    }
}

/// MIDI bytes to a roll sampled at the piece's estimated tempo.
pub fn preprocess_midi(bytes: &[u8], id: &str) -> Result<PianoRoll> {
    let parsed = parse_midi(bytes)?;
    if parsed.unterminated > 0 {
        log::warn!(
            "{id}: {} notes never released; closed at end of track",
            parsed.unterminated
        );
    }
    let tempo = estimate_tempo(&parsed.notes);
    Ok(to_piano_roll(&parsed.notes, tempo)?.with_source_id(id))
}

/// Files in `dir` with extension `ext`, sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let matches = path
            .extension()
            .and_then(|x| x.to_str())
            .is_some_and(|x| x.eq_ignore_ascii_case(ext));
        if matches && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn load_rolls(dir: &Path) -> Result<Vec<PianoRoll>> {
    list_files(dir, ROLL_EXT)?.iter().map(|p| read_proll(p)).collect()
}

/// Rolls in `dir` with their templates: the matching `.ssm` file when
/// present, else the roll's own SSM.
pub fn load_pieces(dir: &Path) -> Result<Vec<Piece>> {
    let mut pieces = Vec::new();
    for path in list_files(dir, ROLL_EXT)? {
        let roll = read_proll(&path)?;
        let ssm_path = path.with_extension(SSM_EXT);
        let id = roll.source_id().to_string();
        let piece = if ssm_path.is_file() {
            let template = read_ssm(&ssm_path)?;
            if template.n() != roll.n_samples() {
                return Err(Error::Shape(format!(
                    "{}: template {} for roll of {}",
                    ssm_path.display(),
                    template.n(),
                    roll.n_samples()
                )));
            }
            Piece { id, roll, template }
        } else {
            Piece::new(id, roll)
        };
        pieces.push(piece);
    }
    Ok(pieces)
}

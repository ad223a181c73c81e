//! Synthetic pieces built from repeated sections, so their SSMs carry clear
//! block and stripe structure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sing::corpus::Piece;
use sing::midi::PianoRoll;
use sing::structure::{Block, SynthSpec};

pub const PIECE_LEN: usize = 128;
pub const TEMPO: f64 = 120.0;
const PITCHES: std::ops::Range<usize> = 48..72;

/// Section labels, samples per section, and how long each chord is held.
pub struct Archetype {
    pub labels: &'static str,
    pub section: usize,
    pub hold: usize,
}

pub const ARCHETYPES: [Archetype; 4] = [
    Archetype {
        labels: "AABA",
        section: 32,
        hold: 1,
    },
    Archetype {
        labels: "ABAB",
        section: 32,
        hold: 2,
    },
    Archetype {
        labels: "ABACABAC",
        section: 16,
        hold: 4,
    },
    Archetype {
        labels: "ABACBACA",
        section: 16,
        hold: 16,
    },
];

fn chord<R: Rng>(rng: &mut R) -> Vec<usize> {
    let k = rng.random_range(1..=3);
    rand::seq::index::sample(rng, PITCHES.len(), k)
        .into_iter()
        .map(|i| PITCHES.start + i)
        .collect()
}

fn section<R: Rng>(rng: &mut R, len: usize, hold: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let c = chord(rng);
        for _ in 0..hold.min(len - out.len()) {
            out.push(c.clone());
        }
    }
    out
}

pub fn structured_roll<R: Rng>(rng: &mut R, arch: &Archetype, id: &str) -> PianoRoll {
    let mut sections: Vec<(char, Vec<Vec<usize>>)> = Vec::new();
    let mut roll = PianoRoll::zeros(PIECE_LEN, TEMPO).unwrap().with_source_id(id);
    let mut s = 0;
    for label in arch.labels.chars() {
        if !sections.iter().any(|(l, _)| *l == label) {
            sections.push((label, section(rng, arch.section, arch.hold)));
        }
        let content = &sections.iter().find(|(l, _)| *l == label).unwrap().1;
        for c in content {
            for &p in c {
                roll.set(p, s, true);
            }
            s += 1;
        }
    }
    assert_eq!(s, PIECE_LEN);
    roll
}

/// `count` pieces cycling through the archetypes.
pub fn structured_corpus(seed: u64, count: usize, prefix: &str) -> Vec<Piece> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let id = format!("{prefix}{i:02}");
            let roll = structured_roll(&mut rng, &ARCHETYPES[i % ARCHETYPES.len()], &id);
            Piece::new(id, roll)
        })
        .collect()
}

/// Hand-built block template, unlike any archetype.
pub fn steering_spec() -> SynthSpec {
    let edges = [0, 24, 40, 72, 96, 128];
    SynthSpec {
        length: PIECE_LEN,
        background: 0.0,
        blocks: edges
            .windows(2)
            .map(|w| Block {
                start: w[0],
                end: w[1],
                level: 0.9,
            })
            .collect(),
    }
}

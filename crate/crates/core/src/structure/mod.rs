//! Chroma features, self-similarity matrices and structural distances.

mod chroma;
mod pgm;
mod ssm;
mod synth;

pub use chroma::{chroma, fold_sample, ChromaSequence, N_CLASSES};
pub use pgm::{render_panels, render_pgm};
pub use ssm::{
    cosine_matrix, decode_ssm, encode_ssm, mse, read_ssm, ssm, standardize, standardized_mse, write_ssm,
    SelfSimilarityMatrix, SquareMatrix, SsmRole, SSM_MAGIC,
};
pub use synth::{synth_ssm, Block, SynthSpec};

use crate::midi::PianoRoll;

/// Template SSM of a roll: chroma, then pairwise cosine similarity.
pub fn roll_ssm(roll: &PianoRoll) -> SelfSimilarityMatrix {
    ssm(&chroma(roll))
}

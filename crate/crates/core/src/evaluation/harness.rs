use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::Piece;
use crate::error::Result;
use crate::midi::PianoRoll;
use crate::structure::{render_panels, roll_ssm, standardized_mse, SelfSimilarityMatrix, SsmRole};

use super::generator::Generator;

pub const GENERATIONS_PER_PIECE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct PieceResult {
    pub piece_id: String,
    pub std_mse: Vec<f64>,
    /// SSM of the first generation, kept for figures.
    pub first_ssm: SelfSimilarityMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRun {
    pub generator: String,
    pub pieces: Vec<PieceResult>,
    /// Pieces whose generation failed, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl EvalRun {
    pub fn generation_count(&self) -> usize {
        self.pieces.iter().map(|p| p.std_mse.len()).sum()
    }

    /// Mean over every stored generation; `None` when nothing was generated.
    pub fn mean(&self) -> Option<f64> {
        let n = self.generation_count();
        (n > 0).then(|| self.pieces.iter().flat_map(|p| &p.std_mse).sum::<f64>() / n as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("piece_id,generation_index,std_mse\n");
        for p in &self.pieces {
            for (i, v) in p.std_mse.iter().enumerate() {
                let _ = writeln!(out, "{},{},{:.6}", p.piece_id, i, v);
            }
        }
        let mean = self.mean().map(|m| format!("{m:.6}")).unwrap_or_else(|| "nan".into());
        let _ = writeln!(
            out,
            "# generator={} pieces={} generations={} skipped={} mean_std_mse={}",
            self.generator,
            self.pieces.len(),
            self.generation_count(),
            self.skipped.len(),
            mean
        );
        out
    }
}

/// Standardized MSE between a template and the SSM of a generated roll.
pub fn score(template: &SelfSimilarityMatrix, generated: &PianoRoll) -> Result<(f64, SelfSimilarityMatrix)> {
    let g = roll_ssm(generated).with_role(SsmRole::Generated);
    Ok((standardized_mse(template, &g)?, g))
}

/// `generations` rolls per piece, each scored against the piece's template.
///
/// Each piece gets its own generator stream seeded from `rng` in piece
/// order, so results do not depend on how pieces are spread over threads.
pub fn evaluate<R: Rng + ?Sized>(
    generator: &dyn Generator,
    pieces: &[Piece],
    generations: usize,
    rng: &mut R,
) -> EvalRun {
    let seeds: Vec<u64> = pieces.iter().map(|_| rng.random()).collect();
    let outcomes: Vec<Result<PieceResult>> = pieces
        .par_iter()
        .zip(seeds)
        .map(|(piece, seed)| {
            let mut prng = ChaCha8Rng::seed_from_u64(seed);
            let mut std_mse = Vec::with_capacity(generations);
            let mut first_ssm = None;
            for _ in 0..generations {
                let roll = generator.generate(piece, &mut prng)?;
                let (mse, g) = score(&piece.template, &roll)?;
                std_mse.push(mse);
                first_ssm.get_or_insert(g);
            }
            Ok(PieceResult {
                piece_id: piece.id.clone(),
                std_mse,
                first_ssm: first_ssm.unwrap_or_else(|| piece.template.clone()),
            })
        })
        .collect();
    let mut run = EvalRun {
        generator: generator.name().to_string(),
        pieces: Vec::new(),
        skipped: Vec::new(),
    };
    for (piece, outcome) in pieces.iter().zip(outcomes) {
        match outcome {
            Ok(r) => run.pieces.push(r),
            Err(e) => {
                log::warn!("skipping {}: {e}", piece.id);
                run.skipped.push((piece.id.clone(), e.to_string()));
            }
        }
    }
    run
}

/// Template beside two generated SSMs, as one PGM image.
pub fn triptych(template: &SelfSimilarityMatrix, left: &SelfSimilarityMatrix, right: &SelfSimilarityMatrix) -> Vec<u8> {
    render_panels(&[&template.values, &left.values, &right.values])
}

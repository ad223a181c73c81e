//! Structural evaluation: generate against held-out templates and score
//! each result by standardized MSE between SSMs.

mod generator;
mod harness;

pub use generator::{
    random_baseline, Generator, GeneratorContext, GeneratorFactory, GeneratorRegistry, ModelGenerator, RandomGenerator,
};
pub use harness::{evaluate, score, triptych, EvalRun, PieceResult, GENERATIONS_PER_PIECE};

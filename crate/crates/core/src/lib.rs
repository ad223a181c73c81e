//! Structure-informed symbolic music generation.
//!
//! A piano roll is generated one sample at a time by an LSTM whose output is
//! combined with a sparse attention read over earlier samples. The attention
//! weights come from a self-similarity matrix (SSM) describing the repetition
//! structure the output should follow.

pub mod batching;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod midi;
pub mod model;
pub mod nn;
pub mod structure;
pub mod training;

pub use error::{Error, Result};

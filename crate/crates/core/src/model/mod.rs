//! The generator: an LSTM over piano-roll samples whose output is merged with
//! an attention read over earlier samples, weighted by a template SSM row.

mod attention;
mod combiner;
mod config;
mod sampler;
mod sing;

pub use attention::{attention_step, Attention};
pub use combiner::{
    AttachFn, Combiner, CombinerEntry, CombinerRegistry, DenseCombiner, InitFn, PerPitchCombiner, HEAD_B, HEAD_W,
};
pub use config::ModelConfig;
pub use sampler::{sample_notes, top_k_candidates};
pub use sing::{to_f64, ForwardTrace, LstmState, SingModel, TraceStep};

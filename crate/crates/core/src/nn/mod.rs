//! Small differentiable kernels with hand-written backward passes.
//!
//! Every backward function accumulates into caller-owned gradient buffers
//! (`+=`), so gradients from several sequences or batch members can be summed
//! before one optimizer step.

mod adam;
mod bce;
mod checkpoint;
mod dense;
mod lstm;
mod params;
mod sparsemax;
mod tensor;

pub use adam::{adam_step, AdamConfig};
pub use bce::bce_with_logits;
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CKPT_MAGIC, CKPT_VERSION,
};
pub use dense::{dense_backward, dense_backward_acc, dense_forward, DenseGrads};
pub use lstm::{lstm_backward, lstm_cell, LstmGrads, LstmStep, LstmWeights};
pub use params::{Param, ParamId, ParamSet};
pub use sparsemax::{sparsemax, sparsemax_backward};
pub use tensor::{dot, sigmoid, Tensor2};

//! Training with scheduled sampling, a combined note-level and structural
//! loss, per-batch Adam updates and validation-based model selection.

mod loss;
mod schedule;
mod trainer;

pub use loss::{cosine_mse_grad, piece_loss, PieceLoss};
pub use schedule::scheduled_step;
pub use trainer::{
    checkpoint_path, piece_pass, prepare_pieces, reports_csv, scheduled_forward, select_best, train, train_epoch,
    validation_loss, EpochReport, TrainConfig, BEST_CHECKPOINT, REPORT_FILE, REPORT_HEADER,
};

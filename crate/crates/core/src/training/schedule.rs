use rand::Rng;

use crate::model::{sample_notes, to_f64, ModelConfig};

/// Next input after predicting `logits` at a step whose target is
/// `target`: with probability `p_feedback` the model's own draw, otherwise
/// the target. The coin is tossed before any note is drawn.
pub fn scheduled_step<R: Rng + ?Sized>(
    logits: &[f64],
    target: &[u8],
    p_feedback: f64,
    cfg: &ModelConfig,
    rng: &mut R,
) -> (Vec<f64>, bool) {
    if rng.random_bool(p_feedback) {
        (to_f64(&sample_notes(logits, cfg, rng)), true)
    } else {
        (to_f64(target), false)
    }
}

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::midi::N_PITCHES;
use crate::nn::sigmoid;

use super::config::ModelConfig;

/// The `top_k` allowed pitches by probability σ(d), ties to the lower pitch,
/// with their probabilities.
pub fn top_k_candidates(logits: &[f64], cfg: &ModelConfig) -> Vec<(usize, f64)> {
    let mut cands: Vec<(usize, f64)> = cfg.allowed_pitches().map(|p| (p, sigmoid(logits[p]))).collect();
    cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    cands.truncate(cfg.top_k);
    cands
}

/// Draw `max_notes` pitches with replacement from the renormalised top-k
/// distribution and activate the distinct ones.
///
/// If every candidate has probability zero the draw is uniform over the
/// candidates instead.
pub fn sample_notes<R: Rng + ?Sized>(logits: &[f64], cfg: &ModelConfig, rng: &mut R) -> Vec<u8> {
    assert_eq!(logits.len(), N_PITCHES, "one logit per pitch");
    let cands = top_k_candidates(logits, cfg);
    let weights: Vec<f64> = cands.iter().map(|c| c.1).collect();
    let dist = WeightedIndex::new(&weights)
        .unwrap_or_else(|_| WeightedIndex::new(vec![1.0; cands.len()]).expect("non-empty candidates"));
    let mut out = vec![0u8; N_PITCHES];
    for _ in 0..cfg.max_notes {
        out[cands[dist.sample(rng)].0] = 1;
    }
    out
}

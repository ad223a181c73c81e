use crate::error::{Error, Result};
use crate::midi::N_PITCHES;
use crate::nn::sparsemax;
use crate::structure::SelfSimilarityMatrix;

/// Sparse weights over earlier samples and the weighted sum they produce.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    pub weights: Vec<f64>,
    pub vector: Vec<f64>,
}

/// Attention for the sample at index `t`: sparsemax over the first `t`
/// entries of template row `t`, applied to the `t` earlier samples.
pub fn attention_step(template: &SelfSimilarityMatrix, t: usize, history: &[Vec<f64>]) -> Result<Attention> {
    if t == 0 {
        return Err(Error::invalid("attention step", "t = 0 has no history"));
    }
    if template.n() <= t {
        return Err(Error::Shape(format!(
            "template of size {} has no row {t}",
            template.n()
        )));
    }
    if history.len() < t {
        return Err(Error::Shape(format!("history has {} samples, need {t}", history.len())));
    }
    let weights = sparsemax(&template.values.row(t)[..t])?;
    let mut vector = vec![0.0; N_PITCHES];
    for (w, y) in weights.iter().zip(history) {
        if *w == 0.0 {
            continue;
        }
        for (a, v) in vector.iter_mut().zip(y) {
            *a += w * v;
        }
    }
    Ok(Attention { weights, vector })
}

use crate::error::{Error, Result};
use crate::midi::PianoRoll;
use crate::model::{to_f64, ForwardTrace};
use crate::nn::{bce_with_logits, sigmoid};
use crate::structure::{cosine_matrix, fold_sample, SelfSimilarityMatrix, SquareMatrix, N_CLASSES};

#[derive(Debug, Clone, PartialEq)]
pub struct PieceLoss {
    pub total: f64,
    pub bce: f64,
    pub structural: f64,
    /// `∂loss/∂d` for every step of the trace; zero on seed steps.
    pub dlogits: Vec<Vec<f64>>,
}

/// Summed BCE over the generated steps plus the MSE between the template
/// and the SSM of the soft output.
///
/// The soft output uses the target chroma on seed samples and the chroma of
/// σ(d) on generated ones, which keeps the structural term differentiable.
pub fn piece_loss(trace: &ForwardTrace, target: &PianoRoll, template: &SelfSimilarityMatrix) -> Result<PieceLoss> {
    let n = trace.n_samples();
    if target.n_samples() != n || template.n() != n {
        return Err(Error::Shape(format!(
            "trace covers {n} samples, target {}, template {}",
            target.n_samples(),
            template.n()
        )));
    }
    let k = trace.seed_len;
    let mut bce = 0.0;
    let mut dlogits = vec![vec![0.0; trace.steps[0].logits.len()]; trace.steps.len()];
    let mut probs = Vec::with_capacity(n - k);
    let mut columns: Vec<[f64; N_CLASSES]> = (0..k).map(|s| fold_sample(target.sample(s))).collect();
    for step in trace.generated_steps() {
        let (l, g) = bce_with_logits(&step.logits, &to_f64(target.sample(step.t)));
        bce += l;
        dlogits[step.t - 1] = g;
        let p: Vec<f64> = step.logits.iter().map(|&d| sigmoid(d)).collect();
        columns.push(fold_sample(&p));
        probs.push(p);
    }
    let (structural, dcols) = cosine_mse_grad(&columns, &template.values)?;
    for (i, p) in probs.iter().enumerate() {
        let s = k + i;
        let dd = &mut dlogits[s - 1];
        for (pitch, (g, &pr)) in dd.iter_mut().zip(p).enumerate() {
            *g += dcols[s][pitch % N_CLASSES] * pr * (1.0 - pr);
        }
    }
    let total = bce + structural;
    Ok(PieceLoss {
        total,
        bce,
        structural,
        dlogits,
    })
}

/// MSE between the cosine SSM of `columns` and `target`, with its gradient
/// with respect to each column.
///
/// The diagonal is fixed at one and contributes nothing; all-zero columns
/// have zero similarity and receive zero gradient.
pub fn cosine_mse_grad(columns: &[[f64; N_CLASSES]], target: &SquareMatrix) -> Result<(f64, Vec<[f64; N_CLASSES]>)> {
    let n = columns.len();
    if target.n() != n {
        return Err(Error::Shape(format!("{n} columns vs {}×{0} target", target.n())));
    }
    let g = cosine_matrix(columns);
    let nn = (n * n) as f64;
    let mut loss = 0.0;
    for (a, b) in g.data().iter().zip(target.data()) {
        loss += (a - b) * (a - b);
    }
    loss /= nn;

    let norms: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let units: Vec<[f64; N_CLASSES]> = columns
        .iter()
        .zip(&norms)
        .map(|(c, &m)| if m > 0.0 { c.map(|v| v / m) } else { [0.0; N_CLASSES] })
        .collect();
    let mut grads = vec![[0.0; N_CLASSES]; n];
    for i in 0..n {
        if norms[i] == 0.0 {
            continue;
        }
        let mut du = [0.0; N_CLASSES];
        for j in 0..n {
            if j == i || norms[j] == 0.0 {
                continue;
            }
            let coef = 2.0 / nn * ((g.get(i, j) - target.get(i, j)) + (g.get(j, i) - target.get(j, i)));
            for (d, u) in du.iter_mut().zip(&units[j]) {
                *d += coef * u;
            }
        }
        let proj: f64 = du.iter().zip(&units[i]).map(|(a, b)| a * b).sum();
        for c in 0..N_CLASSES {
            grads[i][c] = (du[c] - proj * units[i][c]) / norms[i];
        }
    }
    Ok((loss, grads))
}

use super::tensor::sigmoid;

/// Multi-label binary cross-entropy from logits, summed over entries and
/// returned as a positive loss, with its gradient `σ(x) − y`.
pub fn bce_with_logits(x: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
    debug_assert_eq!(x.len(), y.len());
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(x.len());
    for (&xi, &yi) in x.iter().zip(y) {
        loss += xi.max(0.0) - xi * yi + (-xi.abs()).exp().ln_1p();
        grad.push(sigmoid(xi) - yi);
    }
    (loss, grad)
}

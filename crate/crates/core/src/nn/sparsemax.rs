use crate::error::{Error, Result};

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn sparsemax(q: &[f64]) -> Result<Vec<f64>> {
    if q.is_empty() {
        return Err(Error::invalid("sparsemax input", "empty vector"));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("sparsemax input", "non-finite entry"));
    }
    let tau = threshold(q);
    Ok(q.iter().map(|&v| (v - tau).max(0.0)).collect())
}

fn threshold(q: &[f64]) -> f64 {
    let mut sorted = q.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut support_sum = sorted[0];
    let mut support = 1;
    for (k, &z) in sorted.iter().enumerate() {
        cumsum += z;
        let k1 = (k + 1) as f64;
        if 1.0 + k1 * z > cumsum {
            support = k + 1;
            support_sum = cumsum;
        }
    }
    (support_sum - 1.0) / support as f64
}

/// Vector-Jacobian product at output `p`: on the support, the upstream
/// gradient minus its support mean; zero elsewhere.
pub fn sparsemax_backward(p: &[f64], upstream: &[f64]) -> Vec<f64> {
    let support: Vec<bool> = p.iter().map(|&v| v > 0.0).collect();
    let count = support.iter().filter(|&&s| s).count().max(1);
    let mean = upstream
        .iter()
        .zip(&support)
        .filter(|(_, &s)| s)
        .map(|(u, _)| u)
        .sum::<f64>()
        / count as f64;
    upstream
        .iter()
        .zip(&support)
        .map(|(&u, &s)| if s { u - mean } else { 0.0 })
        .collect()
}

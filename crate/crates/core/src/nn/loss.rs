use super::NnError;

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = p.iter().sum();
    for x in p.iter_mut() {
        *x /= sum;
    }
    p
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&z| z - lse).collect()
}

/// Weighted softmax cross-entropy against a target distribution.
///
/// Returns `-w * sum_j t_j log softmax(z)_j` and its gradient `w * (softmax(z) - t)`.
/// Any real weight is accepted, including negative ones.
pub fn softmax_ce(logits: &[f64], target: &[f64], weight: f64) -> Result<(f64, Vec<f64>), NnError> {
    if logits.len() != target.len() {
        return Err(NnError::Shape(format!(
            "{} logits for a {}-way target",
            logits.len(),
            target.len()
        )));
    }
    let total: f64 = target.iter().sum();
    if (total - 1.0).abs() > 1e-6 || target.iter().any(|&t| t < 0.0) {
        return Err(NnError::Input(format!("target is not a distribution (sums to {total})")));
    }
    if weight == 0.0 {
        return Ok((0.0, vec![0.0; logits.len()]));
    }
    let logp = log_softmax(logits);
    let loss = -weight
        * target
            .iter()
            .zip(&logp)
            .filter(|(&t, _)| t > 0.0)
            .map(|(t, lp)| t * lp)
            .sum::<f64>();
    let grad = logp
        .iter()
        .zip(target)
        .map(|(lp, t)| weight * (lp.exp() - t))
        .collect();
    Ok((loss, grad))
}

/// [`softmax_ce`] with a one-hot target on `label`.
pub fn softmax_ce_label(logits: &[f64], label: usize, weight: f64) -> (f64, Vec<f64>) {
    let logp = log_softmax(logits);
    let loss = -weight * logp[label];
    let mut grad: Vec<f64> = logp.iter().map(|lp| weight * lp.exp()).collect();
    grad[label] -= weight;
    (loss, grad)
}

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Cross-entropy of `softmax(logits)` against `label`, computed with max
/// subtraction. Returns the loss and its gradient `softmax − one_hot(label)`.
pub fn softmax_xent<S: Scalar>(logits: &[S], label: usize) -> Result<(S, Vec<S>)> {
    if logits.is_empty() {
        return Err(Error::Config("softmax over empty logits".into()));
    }
    if label >= logits.len() {
        return Err(Error::OutOfRange {
            context: "softmax_xent",
            detail: format!("label {label} with {} classes", logits.len()),
        });
    }
    let max = logits.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: S = exps.iter().copied().sum();
    let loss = total.ln() - (logits[label] - max);
    let mut grad: Vec<S> = exps.into_iter().map(|e| e / total).collect();
    grad[label] -= S::one();
    if !loss.is_finite() {
        return Err(Error::NonFinite("softmax_xent".into()));
    }
    Ok((loss, grad))
}

/// Softmax probabilities with max subtraction.
pub fn softmax<S: Scalar>(logits: &[S]) -> Vec<S> {
    let max = logits.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: S = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

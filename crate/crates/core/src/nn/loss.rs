use super::matrix::Matrix;
use crate::error::{Error, Result};

/// `-log softmax(row)[label]` via a max-shifted log-sum-exp.
pub fn row_nll(row: &[f64], label: usize) -> f64 {
    let (argmax, max) =
        row.iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
    let rest: f64 = row
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != argmax)
        .map(|(_, &v)| (v - max).exp())
        .sum();
    max + rest.ln_1p() - row[label]
}

/// Mean softmax cross-entropy over the batch and its gradient with respect
/// to the logits, `(softmax - onehot) / batch`.
pub fn nll_loss(logits: &Matrix, labels: &[u8]) -> Result<(f64, Matrix)> {
    if labels.len() != logits.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l as usize >= logits.cols()) {
        return Err(Error::ShapeMismatch(format!(
            "label {bad} out of range for {} classes",
            logits.cols()
        )));
    }
    let n = logits.rows() as f64;
    let mut total = 0.0;
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let loss = row_nll(row, label as usize);
        total += loss;
        let lse = loss + row[label as usize];
        for (c, (g, &v)) in grad.row_mut(r).iter_mut().zip(row).enumerate() {
            let p = (v - lse).exp();
            *g = (p - if c == label as usize { 1.0 } else { 0.0 }) / n;
        }
    }
    Ok((total / n, grad))
}

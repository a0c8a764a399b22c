use super::Tensor2;
use crate::error::{Error, Result};

pub fn relu(x: &Tensor2) -> Tensor2 {
    x.map(|v| v.max(0.0))
}

/// Gradient through ReLU given the pre-activation input.
pub fn relu_backward(x: &Tensor2, dy: &Tensor2) -> Tensor2 {
    let mut dx = dy.clone();
    for (g, &v) in dx.as_mut_slice().iter_mut().zip(x.as_slice()) {
        if v <= 0.0 {
            *g = 0.0;
        }
    }
    dx
}

pub fn softmax_row(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

pub fn softmax_rows(x: &Tensor2) -> Tensor2 {
    let mut out = x.clone();
    for r in 0..out.rows() {
        softmax_row(out.row_mut(r));
    }
    out
}

/// Backward of a row softmax given its output `p`.
pub fn softmax_rows_backward(p: &Tensor2, dp: &Tensor2) -> Tensor2 {
    let mut ds = Tensor2::zeros(p.rows(), p.cols());
    for r in 0..p.rows() {
        let pr = p.row(r);
        let gr = dp.row(r);
        let dot: f64 = pr.iter().zip(gr).map(|(a, b)| a * b).sum();
        for (o, (a, b)) in ds.row_mut(r).iter_mut().zip(pr.iter().zip(gr)) {
            *o = a * (b - dot);
        }
    }
    ds
}

/// Mean cross-entropy of row-wise softmax over `logits` against class ids.
/// Returns the loss and `dL/dlogits`.
pub fn softmax_cross_entropy(logits: &Tensor2, labels: &[usize]) -> Result<(f64, Tensor2)> {
    if logits.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} logit rows for {} labels",
            logits.rows(),
            labels.len()
        )));
    }
    if logits.rows() == 0 {
        return Err(Error::Empty("cross-entropy batch".into()));
    }
    let n = logits.rows() as f64;
    let mut grad = softmax_rows(logits);
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        if label >= logits.cols() {
            return Err(Error::ClassOutOfRange {
                id: label,
                classes: logits.cols(),
            });
        }
        let row = grad.row_mut(r);
        loss -= row[label].max(f64::MIN_POSITIVE).ln();
        row[label] -= 1.0;
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    Ok((loss / n, grad))
}

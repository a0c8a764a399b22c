//! Central finite differences for gradient checks.

use super::Tensor2;

pub const STEP: f64 = 1e-5;

pub fn finite_diff(x: &Tensor2, mut f: impl FnMut(&Tensor2) -> f64) -> Tensor2 {
    let mut grad = Tensor2::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + STEP;
        let up = f(&probe);
        probe.as_mut_slice()[i] = orig - STEP;
        let down = f(&probe);
        probe.as_mut_slice()[i] = orig;
        grad.as_mut_slice()[i] = (up - down) / (2.0 * STEP);
    }
    grad
}

/// Below this norm both gradients are taken to vanish. Key biases under
/// softmax have an exact zero gradient, and central differences of an O(10)
/// loss leave roundoff near 1e-10.
pub const VANISHING: f64 = 1e-7;

/// `‖a − b‖ / max(‖a‖, ‖b‖, 1e-6)`, or 0 when both norms are below
/// [`VANISHING`].
pub fn rel_error(a: &Tensor2, b: &Tensor2) -> f64 {
    rel_error_slices(a.as_slice(), b.as_slice())
}

/// Central differences at selected flat indices only, for tensors too large
/// to probe exhaustively.
pub fn finite_diff_at(x: &Tensor2, indices: &[usize], mut f: impl FnMut(&Tensor2) -> f64) -> Vec<f64> {
    let mut probe = x.clone();
    indices
        .iter()
        .map(|&i| {
            let orig = probe.as_slice()[i];
            probe.as_mut_slice()[i] = orig + STEP;
            let up = f(&probe);
            probe.as_mut_slice()[i] = orig - STEP;
            let down = f(&probe);
            probe.as_mut_slice()[i] = orig;
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

/// [`rel_error`] over plain slices.
pub fn rel_error_slices(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = norm(a).max(norm(b));
    if scale < VANISHING {
        return 0.0;
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / scale.max(1e-6)
}

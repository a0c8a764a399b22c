use crate::error::{Error, Result};

/// Solution of the order-`p` normal equations.
///
/// Coefficients follow the prediction convention
/// `x̂[n] = Σ a[i−1]·x[n−i]`, so an AR(1) process `x[n] = 0.9x[n−1] + e[n]`
/// yields `lpc = [0.9]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevinsonSolution {
    pub lpc: Vec<f64>,
    pub reflection: Vec<f64>,
    /// Prediction error power after each order, starting at order 0 (`r[0]`).
    pub errors: Vec<f64>,
}

impl LevinsonSolution {
    pub fn pred_error(&self) -> f64 {
        *self.errors.last().expect("errors always holds r[0]")
    }
}

/// Levinson-Durbin recursion on `r[0..=p]`.
pub fn levinson_durbin(r: &[f64]) -> Result<LevinsonSolution> {
    let Some(&r0) = r.first() else {
        return Err(Error::Empty("autocorrelation sequence is empty".into()));
    };
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("autocorrelation".into()));
    }
    if r0 <= 0.0 {
        return Err(Error::Degenerate(format!("r[0] = {r0} must be positive")));
    }
    let p = r.len() - 1;
    let mut a = vec![0.0; p];
    let mut prev = vec![0.0; p];
    let mut reflection = Vec::with_capacity(p);
    let mut errors = Vec::with_capacity(p + 1);
    let mut err = r0;
    errors.push(err);
    for i in 1..=p {
        let mut acc = r[i];
        for j in 1..i {
            acc -= a[j - 1] * r[i - j];
        }
        let k = acc / err;
        prev[..i - 1].copy_from_slice(&a[..i - 1]);
        for j in 1..i {
            a[j - 1] = prev[j - 1] - k * prev[i - j - 1];
        }
        a[i - 1] = k;
        err *= 1.0 - k * k;
        if err.is_nan() || err <= 0.0 || k.abs() >= 1.0 {
            return Err(Error::NotPositiveDefinite { order: i, error: err });
        }
        reflection.push(k);
        errors.push(err);
    }
    Ok(LevinsonSolution {
        lpc: a,
        reflection,
        errors,
    })
}

/// Direct-form coefficients from reflection coefficients (step-up recursion),
/// written into `out`.
pub fn reflection_to_lpc(k: &[f64], out: &mut [f64]) {
    let p = k.len();
    debug_assert_eq!(out.len(), p);
    for i in 0..p {
        out[i] = k[i];
        for j in 0..i / 2 + i % 2 {
            let (lo, hi) = (out[j], out[i - 1 - j]);
            out[j] = lo - k[i] * hi;
            if j != i - 1 - j {
                out[i - 1 - j] = hi - k[i] * lo;
            }
        }
    }
}

use super::Tensor2;
use crate::error::{Error, Result};

/// Sinusoidal position table:
/// `PE(t, 2i) = sin(t / 10000^(2i/D))`, `PE(t, 2i+1) = cos(t / 10000^(2i/D))`.
pub fn position_encoding(len: usize, dim: usize) -> Result<Tensor2> {
    if !dim.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "position encoding width must be even, got {dim}"
        )));
    }
    let mut pe = Tensor2::zeros(len, dim);
    for t in 0..len {
        let row = pe.row_mut(t);
        for i in 0..dim / 2 {
            let angle = t as f64 / 10000f64.powf(2.0 * i as f64 / dim as f64);
            row[2 * i] = angle.sin();
            row[2 * i + 1] = angle.cos();
        }
    }
    Ok(pe)
}

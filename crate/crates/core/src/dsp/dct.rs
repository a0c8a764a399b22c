use std::f64::consts::PI;

use crate::nn::Tensor2;

/// Orthonormal DCT-II matrix with `n_out` rows over `n_in` inputs:
/// `M[k][n] = s_k · cos(π k (2n + 1) / (2 n_in))`, `s_0 = √(1/n_in)`,
/// `s_k = √(2/n_in)` otherwise.
pub fn dct_matrix(n_out: usize, n_in: usize) -> Tensor2 {
    let mut m = Tensor2::zeros(n_out, n_in);
    let n = n_in as f64;
    for k in 0..n_out {
        let s = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        for i in 0..n_in {
            m[(k, i)] = s * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos();
        }
    }
    m
}

/// Applies the first `m.rows()` DCT-II coefficients to `input`.
pub fn dct(m: &Tensor2, input: &[f64]) -> Vec<f64> {
    m.iter_rows()
        .map(|row| row.iter().zip(input).map(|(a, b)| a * b).sum())
        .collect()
}

/// Inverse of a full square orthonormal DCT-II (its transpose).
pub fn idct(m: &Tensor2, coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (k, &c) in coeffs.iter().enumerate().take(m.rows()) {
        for (o, &v) in out.iter_mut().zip(m.row(k)) {
            *o += c * v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_matrix_is_orthonormal() {
        for n in [13, 18, 26] {
            let m = dct_matrix(n, n);
            let gram = m.t_matmul(&m);
            assert!(gram.max_abs_diff(&Tensor2::identity(n)) < 1e-10);
        }
    }

    #[test]
    fn constant_input_only_excites_c0() {
        let m = dct_matrix(13, 26);
        let c = dct(&m, &[-2.5; 26]);
        assert!((c[0] - (-2.5 * 26f64.sqrt())).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn idct_inverts_dct() {
        let m = dct_matrix(18, 18);
        let x: Vec<f64> = (0..18).map(|i| (i as f64 * 0.37).sin()).collect();
        let back = idct(&m, &dct(&m, &x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

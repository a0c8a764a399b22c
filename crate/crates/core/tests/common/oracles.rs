//! Reference computations written from the textbook definitions.

use std::f64::consts::PI;

use fsvc::dsp::bark::log_band_energies;
use fsvc::dsp::dct::{dct, dct_matrix};
use fsvc::dsp::{frame_signal, AudioSignal, FEATURE_DIM, N_BARK_BANDS, SAMPLE_RATE};

/// Orthonormal DCT-II straight from its definition sum.
pub fn direct_dct(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let s = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            s * x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / n).cos())
                .sum::<f64>()
        })
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot = &top[col];
        for (k, lower) in rest.iter_mut().enumerate() {
            let f = lower[col] / pivot[col];
            lower[col..].iter_mut().zip(&pivot[col..]).for_each(|(x, p)| *x -= f * p);
            b[col + 1 + k] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub fn biased_autocorr(x: &[f64], order: usize) -> Vec<f64> {
    (0..=order)
        .map(|lag| x[lag..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / x.len() as f64)
        .collect()
}

/// Bark cepstra of the mean band power over every frame of `x`.
pub fn summary_feature_frame(x: Vec<f64>) -> Vec<f64> {
    let signal = AudioSignal::new(x, SAMPLE_RATE).unwrap();
    let (grid, frames) = frame_signal(&signal, 25.0, 10.0).unwrap();
    let bands = log_band_energies(&frames, &grid).unwrap();
    let mut mean = [0.0; N_BARK_BANDS];
    for row in bands.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v.exp() / bands.rows() as f64;
        }
    }
    let logs: Vec<f64> = mean.iter().map(|p| p.ln()).collect();
    let mut frame = dct(&dct_matrix(N_BARK_BANDS, N_BARK_BANDS), &logs);
    frame.resize(FEATURE_DIM, 0.0);
    frame
}

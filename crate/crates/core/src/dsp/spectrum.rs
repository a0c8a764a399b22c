use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::nn::Tensor2;

/// Power spectra of windowed frames, `|X(k)|²` for `k = 0..=n_fft/2`, with
/// `n_fft` the next power of two at or above the frame length.
pub struct PowerSpectrum {
    n_fft: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl PowerSpectrum {
    pub fn for_window(window_samples: usize) -> Self {
        let n_fft = window_samples.max(1).next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        Self { n_fft, fft }
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn frame(&self, frame: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(self.n_fft)
            .collect();
        self.fft.process(&mut buf);
        buf[..self.n_bins()].iter().map(|c| c.norm_sqr()).collect()
    }

    /// One row of power per frame.
    pub fn frames(&self, frames: &Tensor2) -> Tensor2 {
        let mut out = Tensor2::zeros(frames.rows(), self.n_bins());
        for t in 0..frames.rows() {
            let p = self.frame(frames.row(t));
            out.row_mut(t).copy_from_slice(&p);
        }
        out
    }
}

/// Triangular filters as a `n_bins × n_filters` weight matrix, one filter
/// per consecutive triple of edge frequencies (Hz).
pub(crate) fn triangular_filters(edges_hz: &[f64], n_bins: usize, sample_rate: f64) -> Tensor2 {
    let n_filters = edges_hz.len() - 2;
    let n_fft = 2 * (n_bins - 1);
    let mut w = Tensor2::zeros(n_bins, n_filters);
    for b in 0..n_filters {
        let (lo, center, hi) = (edges_hz[b], edges_hz[b + 1], edges_hz[b + 2]);
        for k in 0..n_bins {
            let f = k as f64 * sample_rate / n_fft as f64;
            let v = if f > lo && f <= center {
                (f - lo) / (center - lo)
            } else if f > center && f < hi {
                (hi - f) / (hi - center)
            } else {
                0.0
            };
            w[(k, b)] = v;
        }
    }
    w
}

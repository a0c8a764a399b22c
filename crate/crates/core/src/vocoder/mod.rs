//! Linear-prediction source-filter vocoder driven by 20-dim feature frames.

pub mod levinson;
pub mod synthesis;

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::dsp::bark::{
    band_centers_hz, bark_filterbank, decode_period, CORR_COLUMN, MAX_PERIOD, MIN_PERIOD,
    N_BARK_BANDS, PERIOD_COLUMN,
};
use crate::dsp::dct::{dct_matrix, idct};
use crate::dsp::mfcc::ENERGY_FLOOR;
use crate::dsp::pitch::VOICING_THRESHOLD;
use crate::dsp::{FEATURE_DIM, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::nn::Tensor2;

pub use levinson::{levinson_durbin, reflection_to_lpc, LevinsonSolution};
pub use synthesis::{analyze_frames, lpc_synthesize, synthesize_frames, Synthesis};

pub const LPC_ORDER: usize = 16;
/// Size of the inverse FFT that turns the power spectrum into an
/// autocorrelation.
pub const SPECTRUM_FFT: usize = 512;
const REFINE_ITERS: usize = 12;
const REFINE_TOL: f64 = 1e-6;

/// One frame's all-pole filter and excitation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcFrame {
    /// Prediction coefficients `a1..a16`, `x̂[n] = Σ a_i·x[n−i]`.
    pub lpc: Vec<f64>,
    pub reflection: Vec<f64>,
    pub gain: f64,
    /// Pitch period in samples, or 0 for an unvoiced frame.
    pub period_samples: usize,
    pub pitch_corr: f64,
}

impl LpcFrame {
    pub fn is_stable(&self) -> bool {
        self.reflection.iter().all(|k| k.abs() < 1.0) && self.gain.is_finite() && self.gain >= 0.0
    }

    pub fn silent() -> Self {
        Self {
            lpc: vec![0.0; LPC_ORDER],
            reflection: vec![0.0; LPC_ORDER],
            gain: 0.0,
            period_samples: 0,
            pitch_corr: 0.0,
        }
    }
}

/// Precomputed tables shared by every frame.
pub struct LpcAnalyzer {
    idct: Tensor2,
    /// For each spectrum bin, `(band below, band above, weight of above)`.
    interp: Vec<(usize, usize, f64)>,
    bank: Tensor2,
    band_weight: Vec<f64>,
    ifft: Arc<dyn Fft<f64>>,
}

impl Default for LpcAnalyzer {
    fn default() -> Self {
        Self::new()
    }
}

impl LpcAnalyzer {
    pub fn new() -> Self {
        let n_bins = SPECTRUM_FFT / 2 + 1;
        let centers = band_centers_hz();
        let interp = (0..n_bins)
            .map(|k| {
                let f = k as f64 * SAMPLE_RATE as f64 / SPECTRUM_FFT as f64;
                match centers.iter().position(|&c| c > f) {
                    Some(0) => (0, 0, 0.0),
                    None => (N_BARK_BANDS - 1, N_BARK_BANDS - 1, 0.0),
                    Some(hi) => {
                        let lo = hi - 1;
                        (lo, hi, (f - centers[lo]) / (centers[hi] - centers[lo]))
                    }
                }
            })
            .collect();
        let bank = bark_filterbank(n_bins);
        Self {
            idct: dct_matrix(N_BARK_BANDS, N_BARK_BANDS),
            interp,
            band_weight: bank.sum_rows().into_vec(),
            bank,
            ifft: FftPlanner::new().plan_fft_inverse(SPECTRUM_FFT),
        }
    }

    /// Per-bin power spectral density over `0..=Nyquist` implied by the
    /// Bark cepstra, piecewise-linear in log power between band centers and
    /// flat beyond the outermost centers.
    ///
    /// The node values are refined so that re-applying the Bark filterbank
    /// to the returned spectrum reproduces the decoded band energies; using
    /// the band energies directly as nodes would flatten spectral peaks by
    /// the width of the triangular filters.
    pub fn power_spectrum(&self, cepstra: &[f64]) -> Vec<f64> {
        let target = idct(&self.idct, &cepstra[..N_BARK_BANDS]);
        let mut nodes = target.clone();
        let mut best = (f64::INFINITY, nodes.clone());
        for _ in 0..REFINE_ITERS {
            let log_bands = self.band_means(&self.interpolate(&nodes));
            let mut worst: f64 = 0.0;
            for b in 0..N_BARK_BANDS {
                let r = target[b] - log_bands[b];
                worst = worst.max(r.abs());
                nodes[b] += r.clamp(-1.0, 1.0);
            }
            if worst < best.0 {
                best = (worst, nodes.clone());
            }
            if worst < REFINE_TOL {
                break;
            }
        }
        self.interpolate(&best.1)
    }

    fn interpolate(&self, log_nodes: &[f64]) -> Vec<f64> {
        self.interp
            .iter()
            .map(|&(lo, hi, t)| ((1.0 - t) * log_nodes[lo] + t * log_nodes[hi]).exp())
            .collect()
    }

    /// Log of the filter-weighted mean power in each band, matching the
    /// analysis side.
    fn band_means(&self, psd: &[f64]) -> Vec<f64> {
        let mut e = [0.0; N_BARK_BANDS];
        for (k, p) in psd.iter().enumerate() {
            for (eb, w) in e.iter_mut().zip(self.bank.row(k)) {
                *eb += w * p;
            }
        }
        e.iter()
            .zip(&self.band_weight)
            .map(|(v, w)| (v / w).max(ENERGY_FLOOR).ln())
            .collect()
    }

    /// Autocorrelation lags `0..=order` of the spectrum from
    /// [`power_spectrum`](Self::power_spectrum).
    pub fn autocorrelation(&self, psd: &[f64], order: usize) -> Vec<f64> {
        let n = SPECTRUM_FFT;
        let mut buf: Vec<Complex<f64>> = (0..n)
            .map(|k| Complex::new(psd[if k <= n / 2 { k } else { n - k }], 0.0))
            .collect();
        self.ifft.process(&mut buf);
        buf[..=order].iter().map(|c| c.re / n as f64).collect()
    }

    pub fn cepstra_to_lpc(&self, frame: &[f64]) -> Result<LpcFrame> {
        if frame.len() != FEATURE_DIM {
            return Err(Error::Shape(format!(
                "feature frame needs {FEATURE_DIM} values, got {}",
                frame.len()
            )));
        }
        if frame.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature frame".into()));
        }
        let r = self.autocorrelation(&self.power_spectrum(frame), LPC_ORDER);
        let sol = levinson_durbin(&r)?;
        let pitch_corr = frame[CORR_COLUMN].clamp(0.0, 1.0);
        let period_samples = if pitch_corr >= VOICING_THRESHOLD {
            (decode_period(frame[PERIOD_COLUMN]).round() as usize).clamp(MIN_PERIOD, MAX_PERIOD)
        } else {
            0
        };
        Ok(LpcFrame {
            gain: sol.pred_error().sqrt(),
            lpc: sol.lpc,
            reflection: sol.reflection,
            period_samples,
            pitch_corr,
        })
    }
}

/// Order-16 LP filter, gain and pitch parameters of one feature frame.
pub fn cepstra_to_lpc(frame: &[f64]) -> Result<LpcFrame> {
    LpcAnalyzer::new().cepstra_to_lpc(frame)
}

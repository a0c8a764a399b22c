//! 39-dimensional MFCC vectors: 13 static coefficients plus first and second
//! order regression deltas.

use super::audio::{FrameGrid, SAMPLE_RATE};
use super::dct::{dct, dct_matrix};
use super::spectrum::{triangular_filters, PowerSpectrum};
use crate::error::{Error, Result};
use crate::nn::Tensor2;

pub const N_MEL_FILTERS: usize = 26;
pub const N_CEPS: usize = 13;
pub const MFCC_DIM: usize = 3 * N_CEPS;
pub const ENERGY_FLOOR: f64 = 1e-10;
/// Regression half-width for delta features.
pub const DELTA_WINDOW: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct MfccSequence {
    pub frames: Tensor2,
    pub grid: FrameGrid,
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Mel filterbank weights, `n_bins × N_MEL_FILTERS`, spanning 0 Hz to Nyquist.
pub fn mel_filterbank(n_bins: usize) -> Tensor2 {
    let top = hz_to_mel(SAMPLE_RATE as f64 / 2.0);
    let edges: Vec<f64> = (0..N_MEL_FILTERS + 2)
        .map(|i| mel_to_hz(top * i as f64 / (N_MEL_FILTERS + 1) as f64))
        .collect();
    triangular_filters(&edges, n_bins, SAMPLE_RATE as f64)
}

/// Floored natural-log mel energies per frame (`T × 26`).
pub fn log_mel_energies(frames: &Tensor2, grid: &FrameGrid) -> Result<Tensor2> {
    if frames.cols() != grid.window_samples || frames.rows() != grid.n_frames {
        return Err(Error::Shape(format!(
            "frames {:?} do not match grid of {} x {}",
            frames.shape(),
            grid.n_frames,
            grid.window_samples
        )));
    }
    let spec = PowerSpectrum::for_window(grid.window_samples);
    let power = spec.frames(frames);
    let bank = mel_filterbank(spec.n_bins());
    Ok(power.matmul(&bank).map(|e| e.max(ENERGY_FLOOR).ln()))
}

pub fn compute_mfcc(frames: &Tensor2, grid: &FrameGrid) -> Result<MfccSequence> {
    let log_mel = log_mel_energies(frames, grid)?;
    let m = dct_matrix(N_CEPS, N_MEL_FILTERS);
    let mut statics = Tensor2::zeros(log_mel.rows(), N_CEPS);
    for t in 0..log_mel.rows() {
        let c = dct(&m, log_mel.row(t));
        statics.row_mut(t).copy_from_slice(&c);
    }
    let d1 = deltas(&statics);
    let d2 = deltas(&d1);
    let frames = statics.hcat(&d1)?.hcat(&d2)?;
    Ok(MfccSequence { frames, grid: *grid })
}

/// `d_t = Σ_n n (c_{t+n} − c_{t−n}) / (2 Σ_n n²)` over `n = 1..=2`, with the
/// first and last frames replicated past the edges.
pub fn deltas(x: &Tensor2) -> Tensor2 {
    let t_len = x.rows();
    let denom: f64 = 2.0 * (1..=DELTA_WINDOW).map(|n| (n * n) as f64).sum::<f64>();
    let mut out = Tensor2::zeros(t_len, x.cols());
    if t_len == 0 {
        return out;
    }
    let clamp = |i: isize| i.clamp(0, t_len as isize - 1) as usize;
    for t in 0..t_len {
        let row = out.row_mut(t);
        for n in 1..=DELTA_WINDOW {
            let ahead = x.row(clamp(t as isize + n as isize));
            let behind = x.row(clamp(t as isize - n as isize));
            for (o, (a, b)) in row.iter_mut().zip(ahead.iter().zip(behind)) {
                *o += n as f64 * (a - b);
            }
        }
        for o in row.iter_mut() {
            *o /= denom;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::audio::{frame_signal, AudioSignal};

    #[test]
    fn silence_only_excites_c0() {
        let signal = AudioSignal::new(vec![0.0; 4000], SAMPLE_RATE).unwrap();
        let (grid, frames) = frame_signal(&signal, 25.0, 10.0).unwrap();
        let mfcc = compute_mfcc(&frames, &grid).unwrap();
        let c0 = ENERGY_FLOOR.ln() * (N_MEL_FILTERS as f64).sqrt();
        for row in mfcc.frames.iter_rows() {
            assert!((row[0] - c0).abs() < 1e-9);
            assert!(row[1..].iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn deltas_of_a_ramp_are_its_slope() {
        let x = Tensor2::from_vec(6, 1, (0..6).map(|i| 2.0 * i as f64).collect()).unwrap();
        let d = deltas(&x);
        for t in 2..4 {
            assert!((d[(t, 0)] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn filterbank_covers_the_band() {
        let bank = mel_filterbank(257);
        for b in 0..N_MEL_FILTERS {
            let total: f64 = (0..257).map(|k| bank[(k, b)]).sum();
            assert!(total > 0.0, "filter {b} is empty");
        }
    }
}

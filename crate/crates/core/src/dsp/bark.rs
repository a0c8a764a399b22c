//! 20-dimensional vocoder features: 18 Bark-band cepstra, an encoded pitch
//! period and the pitch correlation.

use super::audio::{hann, FrameGrid, SAMPLE_RATE};
use super::dct::{dct, dct_matrix};
use super::mfcc::ENERGY_FLOOR;
use super::pitch::ProsodyTrack;
use super::spectrum::{triangular_filters, PowerSpectrum};
use crate::error::{Error, Result};
use crate::nn::Tensor2;

pub const N_BARK_BANDS: usize = 18;
pub const FEATURE_DIM: usize = 20;
pub const PERIOD_COLUMN: usize = 18;
pub const CORR_COLUMN: usize = 19;
pub const MIN_PERIOD: usize = 32;
pub const MAX_PERIOD: usize = 320;

#[derive(Debug, Clone, PartialEq)]
pub struct LpcnetFeatureSequence {
    pub frames: Tensor2,
    pub grid: FrameGrid,
}

impl LpcnetFeatureSequence {
    pub fn new(frames: Tensor2, grid: FrameGrid) -> Result<Self> {
        if frames.cols() != FEATURE_DIM {
            return Err(Error::Shape(format!(
                "feature frames need {FEATURE_DIM} columns, got {}",
                frames.cols()
            )));
        }
        if frames.rows() != grid.n_frames {
            return Err(Error::Shape(format!(
                "{} feature frames on a grid of {}",
                frames.rows(),
                grid.n_frames
            )));
        }
        if !frames.is_finite() {
            return Err(Error::NonFinite("feature frames".into()));
        }
        Ok(Self { frames, grid })
    }

    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }
}

/// Traunmüller's Bark approximation.
pub fn hz_to_bark(hz: f64) -> f64 {
    26.81 * hz / (1960.0 + hz) - 0.53
}

pub fn bark_to_hz(bark: f64) -> f64 {
    1960.0 * (bark + 0.53) / (26.28 - bark)
}

/// 18 band centers equally spaced in Bark from 0 Hz to Nyquist inclusive.
pub fn band_centers_hz() -> Vec<f64> {
    let nyquist = SAMPLE_RATE as f64 / 2.0;
    let lo = hz_to_bark(0.0);
    let hi = hz_to_bark(nyquist);
    let last = N_BARK_BANDS - 1;
    (0..N_BARK_BANDS)
        .map(|i| match i {
            0 => 0.0,
            i if i == last => nyquist,
            _ => bark_to_hz(lo + (hi - lo) * i as f64 / last as f64),
        })
        .collect()
}

/// Filter corner frequencies: band `b` rises from edge `b`, peaks at edge
/// `b + 1` and falls to edge `b + 2`. The outer edges lie beyond 0 Hz and
/// Nyquist, so the first and last bands are half triangles and the weights
/// sum to one at every bin.
pub fn bark_band_edges() -> Vec<f64> {
    let centers = band_centers_hz();
    let mut edges = Vec::with_capacity(N_BARK_BANDS + 2);
    edges.push(-1.0);
    edges.extend_from_slice(&centers);
    edges.push(centers[N_BARK_BANDS - 1] + 1.0);
    edges
}

/// `n_bins × 18` triangular weights over a one-sided spectrum.
pub fn bark_filterbank(n_bins: usize) -> Tensor2 {
    triangular_filters(&bark_band_edges(), n_bins, SAMPLE_RATE as f64)
}

/// Log Bark-band energies per frame (`T × 18`): the filter-weighted mean of
/// the power spectrum in each band, normalized by the window energy so that
/// white noise of variance σ² gives `ln σ²` in every band.
pub fn log_band_energies(frames: &Tensor2, grid: &FrameGrid) -> Result<Tensor2> {
    if frames.cols() != grid.window_samples || frames.rows() != grid.n_frames {
        return Err(Error::Shape(format!(
            "frames {:?} do not match grid of {} x {}",
            frames.shape(),
            grid.n_frames,
            grid.window_samples
        )));
    }
    let spec = PowerSpectrum::for_window(grid.window_samples);
    let window_energy: f64 = hann(grid.window_samples).iter().map(|w| w * w).sum();
    let bank = bark_filterbank(spec.n_bins());
    let weights = bank.sum_rows();
    let mut energies = spec.frames(frames).matmul(&bank);
    for t in 0..energies.rows() {
        for (e, w) in energies.row_mut(t).iter_mut().zip(weights.as_slice()) {
            *e = (*e / (window_energy * w)).max(ENERGY_FLOOR).ln();
        }
    }
    Ok(energies)
}

/// `(log2(period) − log2(32)) / 4`.
pub fn encode_period(period_samples: f64) -> f64 {
    (period_samples.log2() - (MIN_PERIOD as f64).log2()) / 4.0
}

pub fn decode_period(encoded: f64) -> f64 {
    2f64.powf(4.0 * encoded + (MIN_PERIOD as f64).log2())
}

pub fn compute_bark_features(
    frames: &Tensor2,
    grid: &FrameGrid,
    prosody: &ProsodyTrack,
) -> Result<LpcnetFeatureSequence> {
    prosody.check_consistent()?;
    if prosody.len() != grid.n_frames {
        return Err(Error::Shape(format!(
            "prosody has {} frames, grid has {}",
            prosody.len(),
            grid.n_frames
        )));
    }
    if prosody.stats.is_some() {
        return Err(Error::InvalidArgument(
            "bark features need the raw (unnormalized) log-F0 track".into(),
        ));
    }
    let log_bands = log_band_energies(frames, grid)?;
    let m = dct_matrix(N_BARK_BANDS, N_BARK_BANDS);
    let mut out = Tensor2::zeros(grid.n_frames, FEATURE_DIM);
    for t in 0..grid.n_frames {
        let ceps = dct(&m, log_bands.row(t));
        let row = out.row_mut(t);
        row[..N_BARK_BANDS].copy_from_slice(&ceps);
        let period = SAMPLE_RATE as f64 / prosody.log_f0[t].exp();
        row[PERIOD_COLUMN] = encode_period(period);
        row[CORR_COLUMN] = prosody.pitch_corr[t].clamp(0.0, 1.0);
    }
    LpcnetFeatureSequence::new(out, *grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_span_the_band_and_increase() {
        let c = band_centers_hz();
        assert_eq!(c.len(), N_BARK_BANDS);
        assert_eq!(c[0], 0.0);
        assert_eq!(c[N_BARK_BANDS - 1], 8000.0);
        assert!(c.windows(2).all(|w| w[1] > w[0]));
        let steps: Vec<f64> = c.windows(2).map(|w| hz_to_bark(w[1]) - hz_to_bark(w[0])).collect();
        assert!(steps.iter().all(|s| (s - steps[0]).abs() < 1e-9));
    }

    #[test]
    fn filterbank_is_a_partition_of_unity() {
        let bank = bark_filterbank(257);
        for k in 0..257 {
            let s: f64 = bank.row(k).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "bin {k}: {s}");
        }
    }

    #[test]
    fn bark_conversion_round_trips() {
        for hz in [50.0, 440.0, 1000.0, 7000.0] {
            assert!((bark_to_hz(hz_to_bark(hz)) - hz).abs() < 1e-9);
        }
    }

    #[test]
    fn period_encoding_round_trips_and_spans_unit_range() {
        assert_eq!(encode_period(32.0), 0.0);
        assert!((encode_period(320.0) - 10f64.log2() / 4.0).abs() < 1e-12);
        assert!((decode_period(encode_period(80.0)) - 80.0).abs() < 1e-9);
    }

    #[test]
    fn normalized_prosody_is_rejected() {
        let grid = FrameGrid::with_frames(25.0, 10.0, 1).unwrap();
        let frames = Tensor2::zeros(1, 400);
        let prosody = ProsodyTrack {
            log_f0: vec![0.0],
            voicing: vec![false],
            pitch_corr: vec![0.0],
            stats: Some((5.0, 1.0)),
        };
        assert!(compute_bark_features(&frames, &grid, &prosody).is_err());
    }
}

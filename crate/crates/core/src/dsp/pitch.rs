//! Normalized-autocorrelation F0 tracking and log-F0 z-scoring.

use super::audio::{AudioSignal, FrameGrid};
use crate::error::{Error, Result};

pub const F0_MIN_HZ: f64 = 50.0;
pub const F0_MAX_HZ: f64 = 500.0;
pub const ANALYSIS_WINDOW_MS: f64 = 40.0;
pub const VOICING_THRESHOLD: f64 = 0.3;
pub const SILENCE_RMS: f64 = 1e-4;
/// Fill value for utterances with no voiced frame at all.
pub const UNVOICED_FILL_HZ: f64 = 100.0;
/// Among local autocorrelation peaks, the shortest lag within this fraction
/// of the best one wins (guards against picking a period multiple).
const PEAK_RATIO: f64 = 0.9;
const MIN_STD: f64 = 1e-8;

/// Per-frame pitch information.
#[derive(Debug, Clone, PartialEq)]
pub struct ProsodyTrack {
    /// Natural log of F0 in Hz, interpolated through unvoiced spans. After
    /// normalization this holds z-scores instead.
    pub log_f0: Vec<f64>,
    pub voicing: Vec<bool>,
    /// Peak normalized autocorrelation, clamped to `[0, 1]`.
    pub pitch_corr: Vec<f64>,
    /// `(mean, std)` applied by [`normalize_log_f0`], if any.
    pub stats: Option<(f64, f64)>,
}

impl ProsodyTrack {
    pub fn len(&self) -> usize {
        self.log_f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_f0.is_empty()
    }

    pub fn voiced_count(&self) -> usize {
        self.voicing.iter().filter(|&&v| v).count()
    }

    /// Hz contour, valid only before normalization.
    pub fn f0_hz(&self) -> Vec<f64> {
        self.log_f0.iter().map(|v| v.exp()).collect()
    }

    pub(crate) fn check_consistent(&self) -> Result<()> {
        if self.voicing.len() != self.len() || self.pitch_corr.len() != self.len() {
            return Err(Error::Shape(format!(
                "prosody columns disagree: {} log-F0, {} voicing, {} correlation",
                self.len(),
                self.voicing.len(),
                self.pitch_corr.len()
            )));
        }
        Ok(())
    }

    /// Undo [`normalize_log_f0`] using the stored statistics.
    pub fn denormalized(&self) -> Result<ProsodyTrack> {
        let (mean, std) = self
            .stats
            .ok_or_else(|| Error::InvalidArgument("track carries no normalization stats".into()))?;
        Ok(ProsodyTrack {
            log_f0: self.log_f0.iter().map(|v| v * std + mean).collect(),
            voicing: self.voicing.clone(),
            pitch_corr: self.pitch_corr.clone(),
            stats: None,
        })
    }
}

/// Lag range `[min, max]` in samples for the F0 search band.
pub fn lag_range(sample_rate: u32) -> (usize, usize) {
    let sr = sample_rate as f64;
    ((sr / F0_MAX_HZ).round() as usize, (sr / F0_MIN_HZ).round() as usize)
}

/// Normalized cross-correlation of `x[0..n-lag]` with `x[lag..n]`.
pub fn normalized_autocorr(x: &[f64], lag: usize) -> f64 {
    if lag >= x.len() {
        return 0.0;
    }
    let a = &x[..x.len() - lag];
    let b = &x[lag..];
    let mut num = 0.0;
    let mut ea = 0.0;
    let mut eb = 0.0;
    for (u, v) in a.iter().zip(b) {
        num += u * v;
        ea += u * u;
        eb += v * v;
    }
    let den = (ea * eb).sqrt();
    if den <= 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Pitch estimate for one analysis segment: `(period in samples, correlation)`.
/// The period is refined by parabolic interpolation around the chosen lag.
pub fn pick_period(segment: &[f64], min_lag: usize, max_lag: usize) -> Option<(f64, f64)> {
    let corr: Vec<f64> = (min_lag.saturating_sub(1)..=max_lag + 1)
        .map(|lag| normalized_autocorr(segment, lag))
        .collect();
    // corr[i] belongs to lag min_lag - 1 + i
    let at = |lag: usize| corr[lag + 1 - min_lag];
    let peaks: Vec<usize> = (min_lag..=max_lag)
        .filter(|&lag| at(lag) > 0.0 && at(lag) >= at(lag - 1) && at(lag) >= at(lag + 1))
        .collect();
    let best = peaks.iter().map(|&l| at(l)).fold(f64::NEG_INFINITY, f64::max);
    let lag = *peaks.iter().find(|&&l| at(l) >= PEAK_RATIO * best)?;
    let (y0, y1, y2) = (at(lag - 1), at(lag), at(lag + 1));
    let curvature = y0 - 2.0 * y1 + y2;
    let shift = if curvature < 0.0 {
        (0.5 * (y0 - y2) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Some((lag as f64 + shift, y1.clamp(0.0, 1.0)))
}

pub fn estimate_f0(signal: &AudioSignal, grid: &FrameGrid) -> Result<ProsodyTrack> {
    signal.check_pipeline_rate()?;
    let sr = signal.sample_rate_hz;
    let (min_lag, max_lag) = lag_range(sr);
    let span = (ANALYSIS_WINDOW_MS * sr as f64 / 1000.0).round() as usize;
    let n = grid.n_frames;

    let mut raw_f0 = vec![0.0; n];
    let mut voicing = vec![false; n];
    let mut pitch_corr = vec![0.0; n];
    let mut segment = vec![0.0; span];
    for t in 0..n {
        let center = (t * grid.hop_samples + grid.window_samples / 2) as isize;
        let start = center - (span / 2) as isize;
        for (i, s) in segment.iter_mut().enumerate() {
            let idx = start + i as isize;
            *s = if idx >= 0 {
                signal.samples.get(idx as usize).copied().unwrap_or(0.0)
            } else {
                0.0
            };
        }
        let rms = (segment.iter().map(|v| v * v).sum::<f64>() / span as f64).sqrt();
        if rms < SILENCE_RMS {
            continue;
        }
        if let Some((period, corr)) = pick_period(&segment, min_lag, max_lag) {
            pitch_corr[t] = corr;
            raw_f0[t] = sr as f64 / period;
            voicing[t] = corr >= VOICING_THRESHOLD
                && (F0_MIN_HZ..=F0_MAX_HZ).contains(&raw_f0[t]);
        }
    }

    let log_f0 = interpolate_unvoiced(&raw_f0, &voicing);
    Ok(ProsodyTrack {
        log_f0,
        voicing,
        pitch_corr,
        stats: None,
    })
}

/// Log of `f0` on voiced frames, linear in log-F0 across unvoiced gaps, held
/// flat past the first/last voiced frame, `ln 100` if nothing is voiced.
fn interpolate_unvoiced(f0: &[f64], voicing: &[bool]) -> Vec<f64> {
    let voiced: Vec<usize> = (0..f0.len()).filter(|&i| voicing[i]).collect();
    if voiced.is_empty() {
        return vec![UNVOICED_FILL_HZ.ln(); f0.len()];
    }
    let mut out = vec![0.0; f0.len()];
    let first = voiced[0];
    let last = *voiced.last().unwrap();
    for (i, o) in out.iter_mut().enumerate() {
        *o = if i <= first {
            f0[first].ln()
        } else if i >= last {
            f0[last].ln()
        } else if voicing[i] {
            f0[i].ln()
        } else {
            let k = voiced.partition_point(|&v| v < i);
            let (a, b) = (voiced[k - 1], voiced[k]);
            let w = (i - a) as f64 / (b - a) as f64;
            (1.0 - w) * f0[a].ln() + w * f0[b].ln()
        };
    }
    out
}

/// Mean and population standard deviation of log-F0 over voiced frames.
pub fn voiced_log_f0_stats(track: &ProsodyTrack) -> Result<(f64, f64)> {
    let voiced: Vec<f64> = track
        .log_f0
        .iter()
        .zip(&track.voicing)
        .filter(|(_, &v)| v)
        .map(|(&l, _)| l)
        .collect();
    stats_of(&voiced)
}

pub(crate) fn stats_of(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::Degenerate(format!(
            "{} voiced frame(s); log-F0 statistics need at least 2",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if std < MIN_STD {
        return Err(Error::Degenerate(format!(
            "log-F0 standard deviation {std:e} is too small to normalize"
        )));
    }
    Ok((mean, std))
}

/// Z-scores log-F0 over all frames. Without `stats` the mean and population
/// std of the voiced frames are used and stored on the returned track.
pub fn normalize_log_f0(track: &ProsodyTrack, stats: Option<(f64, f64)>) -> Result<ProsodyTrack> {
    track.check_consistent()?;
    let (mean, std) = match stats {
        Some((m, s)) => {
            if !(s.is_finite() && m.is_finite()) || s < MIN_STD {
                return Err(Error::Degenerate(format!(
                    "normalization std {s:e} is too small"
                )));
            }
            (m, s)
        }
        None => voiced_log_f0_stats(track)?,
    };
    Ok(ProsodyTrack {
        log_f0: track.log_f0.iter().map(|v| (v - mean) / std).collect(),
        voicing: track.voicing.clone(),
        pitch_corr: track.pitch_corr.clone(),
        stats: Some((mean, std)),
    })
}

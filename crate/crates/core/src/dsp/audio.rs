use crate::error::{Error, Result};
use crate::nn::Tensor2;

/// The only rate the pipeline accepts.
pub const SAMPLE_RATE: u32 = 16_000;

/// Mono PCM audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::SampleRate {
                found: 0,
                expected: SAMPLE_RATE,
            });
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("audio sample {i}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub(crate) fn check_pipeline_rate(&self) -> Result<()> {
        if self.sample_rate_hz != SAMPLE_RATE {
            return Err(Error::SampleRate {
                found: self.sample_rate_hz,
                expected: SAMPLE_RATE,
            });
        }
        Ok(())
    }
}

/// Frame layout of an analysed signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameGrid {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub n_frames: usize,
    pub window_samples: usize,
    pub hop_samples: usize,
}

impl FrameGrid {
    pub const DEFAULT_WINDOW_MS: f64 = 25.0;
    pub const DEFAULT_HOP_MS: f64 = 10.0;

    /// Grid for `n_samples` of audio at the pipeline rate.
    pub fn new(window_ms: f64, hop_ms: f64, n_samples: usize) -> Result<Self> {
        let mut grid = Self::with_frames(window_ms, hop_ms, 0)?;
        grid.n_frames = grid.frames_for(n_samples);
        Ok(grid)
    }

    /// Grid with an explicit frame count, e.g. for synthesized features.
    pub fn with_frames(window_ms: f64, hop_ms: f64, n_frames: usize) -> Result<Self> {
        if !(window_ms.is_finite() && hop_ms.is_finite() && hop_ms > 0.0 && window_ms >= hop_ms) {
            return Err(Error::InvalidArgument(format!(
                "frame grid needs window_ms >= hop_ms > 0, got {window_ms}/{hop_ms}"
            )));
        }
        let per_ms = SAMPLE_RATE as f64 / 1000.0;
        let window_samples = (window_ms * per_ms).round() as usize;
        let hop_samples = (hop_ms * per_ms).round() as usize;
        if hop_samples == 0 || window_samples < hop_samples {
            return Err(Error::InvalidArgument(format!(
                "frame grid rounds to {window_samples}/{hop_samples} samples"
            )));
        }
        Ok(Self {
            window_ms,
            hop_ms,
            n_frames,
            window_samples,
            hop_samples,
        })
    }

    pub fn frames_for(&self, n_samples: usize) -> usize {
        if n_samples <= self.window_samples {
            1
        } else {
            1 + (n_samples - self.window_samples) / self.hop_samples
        }
    }

    /// Same window and hop with a different frame count.
    pub fn resized(&self, n_frames: usize) -> Self {
        Self { n_frames, ..*self }
    }

    /// Window and hop agree; the frame count may differ.
    pub fn same_layout(&self, other: &FrameGrid) -> bool {
        self.window_samples == other.window_samples && self.hop_samples == other.hop_samples
    }
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())
        .collect()
}

/// Splits a signal into Hann-windowed frames (`n_frames × window_samples`).
/// Signals shorter than one window are zero-padded to a single frame.
pub fn frame_signal(
    signal: &AudioSignal,
    window_ms: f64,
    hop_ms: f64,
) -> Result<(FrameGrid, Tensor2)> {
    if signal.is_empty() {
        return Err(Error::Empty("cannot frame an empty signal".into()));
    }
    signal.check_pipeline_rate()?;
    let grid = FrameGrid::new(window_ms, hop_ms, signal.len())?;
    let window = hann(grid.window_samples);
    let mut frames = Tensor2::zeros(grid.n_frames, grid.window_samples);
    for t in 0..grid.n_frames {
        let start = t * grid.hop_samples;
        let row = frames.row_mut(t);
        for (i, (o, w)) in row.iter_mut().zip(&window).enumerate() {
            if let Some(s) = signal.samples.get(start + i) {
                *o = s * w;
            }
        }
    }
    Ok((grid, frames))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(n: usize) -> AudioSignal {
        AudioSignal::new(vec![0.1; n], SAMPLE_RATE).unwrap()
    }

    #[test]
    fn one_second_gives_98_frames() {
        let (grid, frames) = frame_signal(&signal(16_000), 25.0, 10.0).unwrap();
        assert_eq!((grid.window_samples, grid.hop_samples), (400, 160));
        assert_eq!(grid.n_frames, 98);
        assert_eq!(frames.shape(), (98, 400));
    }

    #[test]
    fn exactly_one_window_is_one_frame() {
        assert_eq!(frame_signal(&signal(400), 25.0, 10.0).unwrap().0.n_frames, 1);
    }

    #[test]
    fn short_signal_is_zero_padded() {
        let (grid, frames) = frame_signal(&signal(100), 25.0, 10.0).unwrap();
        assert_eq!(grid.n_frames, 1);
        assert!(frames.row(0)[100..].iter().all(|&v| v == 0.0));
        assert!(frames.row(0)[1..100].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn empty_and_wrong_rate_are_rejected() {
        let empty = AudioSignal::new(vec![], SAMPLE_RATE).unwrap();
        assert!(matches!(frame_signal(&empty, 25.0, 10.0), Err(Error::Empty(_))));
        let cd = AudioSignal::new(vec![0.0; 1000], 44_100).unwrap();
        assert!(matches!(
            frame_signal(&cd, 25.0, 10.0),
            Err(Error::SampleRate { found: 44_100, .. })
        ));
    }

    #[test]
    fn hop_longer_than_window_is_rejected() {
        assert!(FrameGrid::new(10.0, 25.0, 1000).is_err());
        assert!(FrameGrid::new(25.0, 0.0, 1000).is_err());
    }
}

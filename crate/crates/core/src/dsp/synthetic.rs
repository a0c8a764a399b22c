//! Deterministic test signals: tones, AR noise and vowel-like utterances
//! with per-frame class labels.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::audio::{AudioSignal, FrameGrid, SAMPLE_RATE};
use crate::error::Result;

const FS: f64 = SAMPLE_RATE as f64;

pub fn tone(freq_hz: f64, amplitude: f64, n_samples: usize) -> AudioSignal {
    let s = (0..n_samples)
        .map(|n| amplitude * (2.0 * PI * freq_hz * n as f64 / FS).sin())
        .collect();
    AudioSignal::new(s, SAMPLE_RATE).expect("finite samples")
}

pub fn white_noise(std: f64, n_samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            std * z
        })
        .collect()
}

/// `x[n] = Σ a[i]·x[n−1−i] + e[n]` driven by unit-variance noise.
pub fn ar_process(coeffs: &[f64], n_samples: usize, seed: u64) -> Vec<f64> {
    let e = white_noise(1.0, n_samples, seed);
    let mut x = vec![0.0; n_samples];
    for n in 0..n_samples {
        let mut v = e[n];
        for (i, a) in coeffs.iter().enumerate() {
            if n > i {
                v += a * x[n - 1 - i];
            }
        }
        x[n] = v;
    }
    x
}

/// Scales `x` so its largest magnitude is `peak`.
pub fn normalize_peak(x: &mut [f64], peak: f64) {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v *= peak / m);
    }
}

/// Two-pole resonator applied in place.
fn resonate(x: &mut [f64], center_hz: f64, bandwidth_hz: f64) {
    let r = (-PI * bandwidth_hz / FS).exp();
    let theta = 2.0 * PI * center_hz / FS;
    let (a1, a2) = (2.0 * r * theta.cos(), -r * r);
    let gain = 1.0 - r;
    let (mut y1, mut y2) = (0.0, 0.0);
    for v in x.iter_mut() {
        let y = gain * *v + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        *v = y;
    }
}

/// Harmonic source with 1/h roll-off (harmonics below 7 kHz), F0 gliding
/// linearly from `f0_start` to `f0_end`, shaped by formant resonators.
pub fn harmonic_vowel(
    f0_start: f64,
    f0_end: f64,
    formants: &[(f64, f64)],
    n_samples: usize,
) -> Vec<f64> {
    let mut phase = 0.0;
    let mut x = Vec::with_capacity(n_samples);
    for n in 0..n_samples {
        let f0 = f0_start + (f0_end - f0_start) * n as f64 / n_samples.max(1) as f64;
        phase += 2.0 * PI * f0 / FS;
        let n_harm = (7000.0 / f0).floor() as usize;
        let v: f64 = (1..=n_harm).map(|h| (h as f64 * phase).sin() / h as f64).sum();
        x.push(v);
    }
    for &(c, bw) in formants {
        resonate(&mut x, c, bw);
    }
    x
}

/// Formant sets standing in for phonetic classes.
pub const VOWELS: [[(f64, f64); 3]; 6] = [
    [(730.0, 90.0), (1090.0, 110.0), (2440.0, 160.0)],
    [(270.0, 60.0), (2290.0, 100.0), (3010.0, 200.0)],
    [(300.0, 60.0), (870.0, 90.0), (2240.0, 150.0)],
    [(530.0, 80.0), (1840.0, 100.0), (2480.0, 160.0)],
    [(570.0, 80.0), (840.0, 90.0), (2410.0, 160.0)],
    [(440.0, 70.0), (1020.0, 100.0), (2240.0, 150.0)],
];

/// A vowel sequence with the class of every analysis frame.
#[derive(Debug, Clone)]
pub struct LabelledUtterance {
    pub signal: AudioSignal,
    pub labels: Vec<usize>,
}

/// Concatenates `segment_ms`-long vowels from [`VOWELS`] (class = index)
/// with F0 drifting around `f0_hz`; frame labels follow the 25/10 ms grid.
pub fn vowel_sequence(classes: &[usize], segment_ms: f64, f0_hz: f64, peak: f64) -> Result<LabelledUtterance> {
    let seg = (segment_ms * FS / 1000.0).round() as usize;
    let mut x = Vec::with_capacity(seg * classes.len());
    let mut sample_class = Vec::with_capacity(seg * classes.len());
    for (i, &c) in classes.iter().enumerate() {
        let wobble = 1.0 + 0.08 * ((i as f64) * 1.3).sin();
        let f_a = f0_hz * wobble;
        let f_b = f0_hz * (1.0 + 0.08 * ((i as f64 + 1.0) * 1.3).sin());
        x.extend(harmonic_vowel(f_a, f_b, &VOWELS[c % VOWELS.len()], seg));
        sample_class.extend(std::iter::repeat_n(c, seg));
    }
    normalize_peak(&mut x, peak);
    let signal = AudioSignal::new(x, SAMPLE_RATE)?;
    let grid = FrameGrid::new(FrameGrid::DEFAULT_WINDOW_MS, FrameGrid::DEFAULT_HOP_MS, signal.len())?;
    let labels = (0..grid.n_frames)
        .map(|t| {
            let center = (t * grid.hop_samples + grid.window_samples / 2).min(sample_class.len() - 1);
            sample_class[center]
        })
        .collect();
    Ok(LabelledUtterance { signal, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_cover_every_frame() {
        let u = vowel_sequence(&[0, 1, 2], 200.0, 150.0, 0.8).unwrap();
        assert_eq!(u.signal.len(), 9600);
        assert_eq!(u.labels.len(), 1 + (9600 - 400) / 160);
        assert_eq!(u.labels[0], 0);
        assert_eq!(*u.labels.last().unwrap(), 2);
        let peak = u.signal.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 0.8).abs() < 1e-12);
    }

    #[test]
    fn ar_process_is_seeded() {
        assert_eq!(ar_process(&[0.5], 100, 3), ar_process(&[0.5], 100, 3));
        assert_ne!(ar_process(&[0.5], 100, 3), ar_process(&[0.5], 100, 4));
    }
}

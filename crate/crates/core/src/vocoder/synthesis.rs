use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{reflection_to_lpc, LpcAnalyzer, LpcFrame, LPC_ORDER};
use crate::dsp::{AudioSignal, FrameGrid, LpcnetFeatureSequence, SAMPLE_RATE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub signal: AudioSignal,
    /// Frames whose filter was unstable and were replaced by the previous
    /// stable frame.
    pub unstable_frames: usize,
    pub frames: Vec<LpcFrame>,
}

/// Converts every feature row to an [`LpcFrame`], substituting the previous
/// stable frame (or silence) where analysis fails.
pub fn analyze_frames(features: &LpcnetFeatureSequence) -> (Vec<LpcFrame>, usize) {
    let analyzer = LpcAnalyzer::new();
    let mut frames = Vec::with_capacity(features.len());
    let mut unstable = 0;
    let mut last_stable = LpcFrame::silent();
    for row in features.frames.iter_rows() {
        match analyzer.cepstra_to_lpc(row) {
            Ok(f) if f.is_stable() => {
                last_stable = f.clone();
                frames.push(f);
            }
            _ => {
                unstable += 1;
                frames.push(last_stable.clone());
            }
        }
    }
    (frames, unstable)
}

/// Mixed-excitation all-pole synthesis, `hop_samples` output samples per
/// frame. Reflection coefficients and gain are interpolated per sample from
/// the previous frame's values; filter memory and pitch phase carry across
/// frame boundaries.
pub fn lpc_synthesize(
    features: &LpcnetFeatureSequence,
    grid: &FrameGrid,
    seed: u64,
) -> Result<Synthesis> {
    if grid.n_frames != features.len() {
        return Err(Error::Shape(format!(
            "{} feature frames on a grid of {}",
            features.len(),
            grid.n_frames
        )));
    }
    let (frames, unstable_frames) = analyze_frames(features);
    if unstable_frames > 0 {
        log::warn!("{unstable_frames} unstable LPC frames replaced");
    }
    let out = synthesize_frames(&frames, grid.hop_samples, seed)?;
    Ok(Synthesis {
        signal: AudioSignal::new(out, SAMPLE_RATE)?,
        unstable_frames,
        frames,
    })
}

/// Runs the excitation and all-pole filter over already analyzed frames.
pub fn synthesize_frames(frames: &[LpcFrame], hop: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(frames.len() * hop);
    let mut memory = [0.0; LPC_ORDER];
    let mut k = [0.0; LPC_ORDER];
    let mut a = [0.0; LPC_ORDER];
    let mut since_pulse = usize::MAX;
    for (t, frame) in frames.iter().enumerate() {
        let prev = if t == 0 { frame } else { &frames[t - 1] };
        for i in 0..hop {
            let alpha = (i + 1) as f64 / hop as f64;
            for (j, kj) in k.iter_mut().enumerate() {
                *kj = (1.0 - alpha) * prev.reflection[j] + alpha * frame.reflection[j];
            }
            reflection_to_lpc(&k, &mut a);
            let gain = (1.0 - alpha) * prev.gain + alpha * frame.gain;

            let noise: f64 = StandardNormal.sample(&mut rng);
            let excitation = if frame.period_samples > 0 {
                since_pulse = since_pulse.saturating_add(1);
                let pulse = if since_pulse >= frame.period_samples {
                    since_pulse = 0;
                    (frame.period_samples as f64).sqrt()
                } else {
                    0.0
                };
                frame.pitch_corr * pulse + (1.0 - frame.pitch_corr) * noise
            } else {
                since_pulse = usize::MAX;
                noise
            };

            let mut y = gain * excitation;
            for (aj, mj) in a.iter().zip(&memory) {
                y += aj * mj;
            }
            memory.copy_within(0..LPC_ORDER - 1, 1);
            memory[0] = y;
            out.push(y);
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("synthesized samples".into()));
    }
    Ok(out)
}

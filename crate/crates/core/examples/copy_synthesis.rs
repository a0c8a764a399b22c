//! Analyze a 200 Hz harmonic signal into vocoder features, resynthesize it
//! with the LPC vocoder and re-estimate the pitch of the result.
//!
//!     cargo run --example copy_synthesis

use fsvc::dsp::synthetic::{harmonic_vowel, normalize_peak, VOWELS};
use fsvc::dsp::{AudioSignal, SAMPLE_RATE};
use fsvc::io::PipelineConfig;
use fsvc::pipeline::analyze;
use fsvc::vocoder::lpc_synthesize;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig::default();
    let mut x = harmonic_vowel(200.0, 200.0, &VOWELS[0], SAMPLE_RATE as usize);
    normalize_peak(&mut x, 0.5);
    let source = AudioSignal::new(x, SAMPLE_RATE)?;

    let a = analyze(&source, &config)?;
    let out = lpc_synthesize(&a.features, &a.grid, 7)?;
    println!(
        "{} frames vocoded into {} samples, {} unstable frames",
        out.frames.len(),
        out.signal.len(),
        out.unstable_frames
    );

    let back = analyze(&out.signal, &config)?.prosody;
    let f0: Vec<f64> = back
        .f0_hz()
        .into_iter()
        .zip(&back.voicing)
        .filter_map(|(f, &v)| v.then_some(f))
        .collect();
    let worst = f0.iter().map(|f| (f - 200.0).abs() / 200.0).fold(0.0, f64::max);
    println!(
        "re-estimated F0 on {}/{} voiced frames, worst relative error {:.2}%",
        f0.len(),
        back.len(),
        100.0 * worst
    );
    Ok(())
}

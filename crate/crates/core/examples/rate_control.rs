//! Speaking-rate control: resample a PPG/prosody pair to `round(T / rate)`
//! frames before synthesis.
//!
//!     cargo run --example rate_control

use fsvc::dsp::synthetic::vowel_sequence;
use fsvc::dsp::normalize_log_f0;
use fsvc::io::PipelineConfig;
use fsvc::pipeline::analyze;
use fsvc::ppg::{extract_ppg, PpgExtractorParams};
use fsvc::synth::resample_for_rate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig::default();
    let u = vowel_sequence(&[0, 1, 2, 3, 4], 200.0, 150.0, 0.6)?;
    let a = analyze(&u.signal, &config)?;
    let extractor = PpgExtractorParams::new(config.ppg_classes, config.ppg_hidden, 1)?;
    let ppg = extract_ppg(&extractor, &a.mfcc)?;
    let prosody = normalize_log_f0(&a.prosody, None)?;

    println!("source: {} frames", ppg.len());
    for rate in [0.5, 0.8, 1.0, 1.2, 2.0] {
        let (p, pr) = resample_for_rate(&ppg, &prosody, rate)?;
        println!(
            "rate {rate:>3}: {:>3} frames, {:>5} samples after vocoding, voiced {:>3}, row-sum error {:.1e}",
            p.len(),
            p.len() * p.grid.hop_samples,
            pr.voiced_count(),
            p.max_row_deviation()
        );
    }
    Ok(())
}

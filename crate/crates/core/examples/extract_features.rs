//! Analyze one second of a synthetic vowel sequence and write the feature
//! files `fsvc extract` produces.
//!
//!     cargo run --example extract_features

use fsvc::dsp::synthetic::vowel_sequence;
use fsvc::io::{write_wav, FeatureFile, PipelineConfig};
use fsvc::pipeline::{self, ExtractOutputs};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("fsvc-extract-example");
    std::fs::create_dir_all(&dir)?;

    let utt = vowel_sequence(&[0, 3, 1, 4, 2], 200.0, 140.0, 0.7)?;
    let wav = dir.join("vowels.wav");
    write_wav(&utt.signal, &wav)?;

    let outputs = ExtractOutputs {
        mfcc: Some(dir.join("vowels.mfcc.fvcf")),
        ppg: None,
        prosody: Some(dir.join("vowels.prosody.fvcf")),
        feat: Some(dir.join("vowels.feat.fvcf")),
    };
    let a = pipeline::cmd_extract(&wav, &outputs, None, &PipelineConfig::default())?;

    println!("{} samples -> {} frames, files in {}", utt.signal.len(), a.grid.n_frames, dir.display());
    for path in [&outputs.mfcc, &outputs.prosody, &outputs.feat].into_iter().flatten() {
        let f = FeatureFile::load(path)?;
        println!("  {:<24} {} x {}", path.file_name().unwrap().to_string_lossy(), f.matrix.rows(), f.matrix.cols());
    }
    let voiced: Vec<f64> = a
        .prosody
        .f0_hz()
        .into_iter()
        .zip(&a.prosody.voicing)
        .filter_map(|(f, &v)| v.then_some(f))
        .collect();
    println!(
        "voiced frames: {}/{}  mean F0 {:.1} Hz",
        voiced.len(),
        a.prosody.len(),
        voiced.iter().sum::<f64>() / voiced.len().max(1) as f64
    );
    Ok(())
}

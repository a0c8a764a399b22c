//! End to end: label a small corpus, train the extractor, build a target
//! speaker profile, then convert a lower-pitched source utterance at three
//! speaking rates.
//!
//!     cargo run --release --example train_and_convert

use std::path::Path;

use fsvc::dsp::synthetic::vowel_sequence;
use fsvc::io::{write_wav, PipelineConfig};
use fsvc::pipeline::{self, TrainSynthOptions};

fn write_labelled(dir: &Path, name: &str, classes: &[usize], f0: f64) -> fsvc::Result<()> {
    let u = vowel_sequence(classes, 160.0, f0, 0.6)?;
    write_wav(&u.signal, &dir.join(format!("{name}.wav")))?;
    let labels: Vec<String> = u.labels.iter().map(|l| l.to_string()).collect();
    std::fs::write(dir.join(format!("{name}.lab")), labels.join(" ")).map_err(|e| fsvc::Error::io(dir, e))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let work = tempfile::tempdir()?;
    let asr = work.path().join("asr");
    let target = work.path().join("target");
    std::fs::create_dir_all(&asr)?;
    std::fs::create_dir_all(&target)?;

    let config = PipelineConfig {
        ppg_classes: 6,
        ppg_epochs: 25,
        synth_epochs: 150,
        batch_size: 1,
        ..PipelineConfig::default()
    };

    for (i, f0) in [100.0, 150.0, 210.0].into_iter().enumerate() {
        write_labelled(&asr, &format!("a{i}"), &[0, 1, 2, 3, 4, 5], f0)?;
        write_labelled(&asr, &format!("b{i}"), &[5, 3, 1, 4, 2, 0], f0 * 1.1)?;
    }
    let extractor = work.path().join("extractor.fvcm");
    let ppg = pipeline::cmd_train_ppg(&asr, &extractor, &config)?;
    println!("extractor: final cross-entropy {:.4}", ppg.final_loss().unwrap());

    for (i, order) in [[0, 2, 4, 1, 3, 5], [3, 1, 5, 0, 4, 2], [4, 5, 0, 2, 1, 3]].iter().enumerate() {
        let u = vowel_sequence(order, 150.0, 220.0 + 10.0 * i as f64, 0.6)?;
        write_wav(&u.signal, &target.join(format!("t{i}.wav")))?;
    }
    let profile = work.path().join("target.toml");
    let options = TrainSynthOptions {
        speaker_id: Some("target".into()),
        extractor: Some(extractor),
        ..TrainSynthOptions::default()
    };
    let report = pipeline::cmd_train_synth(&target, &profile, &config, &options)?;
    let h = &report.synthesizer.loss_history;
    println!(
        "synthesizer: loss {:.4} -> {:.4} over {} epochs; target log-F0 mean {:.3}",
        h[0],
        h[h.len() - 1],
        report.synthesizer.epochs,
        report.profile.log_f0_mean
    );

    let source = work.path().join("source.wav");
    let s = vowel_sequence(&[1, 3, 5, 0, 2, 4], 170.0, 110.0, 0.6)?;
    write_wav(&s.signal, &source)?;
    for rate in [0.8, 1.0, 1.2] {
        let out = work.path().join(format!("converted_{rate}.wav"));
        let c = pipeline::cmd_convert(&source, &profile, rate, &out, config.seed)?;
        println!(
            "rate {rate}: {} source samples -> {} frames, {} samples",
            s.signal.len(),
            c.features.len(),
            c.synthesis.signal.len()
        );
    }
    Ok(())
}

#![allow(dead_code)]

pub mod grad_suite;
pub mod oracles;

use std::path::{Path, PathBuf};

use fsvc::dsp::synthetic::{harmonic_vowel, normalize_peak, vowel_sequence, VOWELS};
use fsvc::dsp::{AudioSignal, SAMPLE_RATE};
use fsvc::io::{write_wav, PipelineConfig};
use fsvc::pipeline::{self, TrainSynthOptions, TrainSynthReport};

/// Samples that frame into exactly `t` frames on the 25/10 ms grid.
pub fn samples_for_frames(t: usize) -> usize {
    400 + (t - 1) * 160
}

/// A single vowel with a gentle pitch glide, exactly `t` frames long.
pub fn vowel_frames(t: usize, f0: f64, vowel: usize) -> AudioSignal {
    let mut x = harmonic_vowel(f0, f0 * 1.05, &VOWELS[vowel % VOWELS.len()], samples_for_frames(t));
    normalize_peak(&mut x, 0.6);
    AudioSignal::new(x, SAMPLE_RATE).unwrap()
}

pub fn write_signal(dir: &Path, name: &str, signal: &AudioSignal) -> PathBuf {
    let path = dir.join(name);
    write_wav(signal, &path).unwrap();
    path
}

/// One target speaker: same register, different vowel orders.
pub fn target_corpus(dir: &Path, n: usize) {
    std::fs::create_dir_all(dir).unwrap();
    let orders = [[0, 2, 4, 1, 3, 5], [3, 1, 5, 0, 4, 2], [4, 5, 0, 2, 1, 3], [1, 0, 3, 5, 2, 4]];
    for (i, order) in orders.iter().cycle().take(n).enumerate() {
        let u = vowel_sequence(order, 120.0, 220.0, 0.6).unwrap();
        write_signal(dir, &format!("utt{i}.wav"), &u.signal);
    }
}

pub fn desk_config(epochs: usize) -> PipelineConfig {
    PipelineConfig {
        synth_epochs: epochs,
        batch_size: 1,
        ..PipelineConfig::default()
    }
}

/// Trains a profile `target.toml` in `dir` from a fresh `n`-utterance corpus.
pub fn train_profile(dir: &Path, n: usize, epochs: usize) -> (PathBuf, TrainSynthReport) {
    let corpus = dir.join("corpus");
    target_corpus(&corpus, n);
    let profile = dir.join("target.toml");
    let report = pipeline::cmd_train_synth(&corpus, &profile, &desk_config(epochs), &TrainSynthOptions::default()).unwrap();
    (profile, report)
}

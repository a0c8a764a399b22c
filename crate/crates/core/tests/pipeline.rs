//! The command-level operations on small synthetic corpora.

mod common;

use common::{desk_config, samples_for_frames, target_corpus, train_profile, vowel_frames, write_signal};
use fsvc::dsp::synthetic::{harmonic_vowel, normalize_peak, VOWELS};
use fsvc::dsp::{AudioSignal, SAMPLE_RATE};
use fsvc::io::{read_wav, FeatureFile, PipelineConfig};
use fsvc::pipeline::{self, conversion_inputs, ExtractOutputs, SpeakerProfile, TrainSynthOptions};
use fsvc::ppg::PpgExtractorParams;
use fsvc::synth::{mse, synth_forward, SynthesizerParams, BENCH_CSV_HEADER};
use fsvc::Error;

fn outputs(dir: &std::path::Path, tag: &str) -> ExtractOutputs {
    ExtractOutputs {
        mfcc: Some(dir.join(format!("{tag}.mfcc"))),
        ppg: Some(dir.join(format!("{tag}.ppg"))),
        prosody: Some(dir.join(format!("{tag}.prosody"))),
        feat: Some(dir.join(format!("{tag}.feat"))),
    }
}

#[test]
fn extract_writes_aligned_deterministic_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut x = harmonic_vowel(150.0, 160.0, &VOWELS[1], 16000);
    normalize_peak(&mut x, 0.6);
    let wav = write_signal(dir.path(), "one_second.wav", &AudioSignal::new(x, SAMPLE_RATE).unwrap());
    assert_eq!(read_wav(&wav).unwrap().len(), 16000);
    let model = dir.path().join("ppg.fvcm");
    PpgExtractorParams::new(64, 32, 0).unwrap().save(&model).unwrap();
    let config = PipelineConfig::default();

    let a = outputs(dir.path(), "a");
    pipeline::cmd_extract(&wav, &a, Some(&model), &config).unwrap();
    let shape = |p: &Option<std::path::PathBuf>| FeatureFile::load(p.as_ref().unwrap()).unwrap().matrix.shape();
    assert_eq!(shape(&a.mfcc), (98, 39));
    assert_eq!(shape(&a.ppg), (98, 64));
    assert_eq!(shape(&a.prosody), (98, 3));
    assert_eq!(shape(&a.feat), (98, 20));

    let b = outputs(dir.path(), "b");
    pipeline::cmd_extract(&wav, &b, Some(&model), &config).unwrap();
    for (x, y) in [(&a.mfcc, &b.mfcc), (&a.ppg, &b.ppg), (&a.prosody, &b.prosody), (&a.feat, &b.feat)] {
        assert_eq!(std::fs::read(x.as_ref().unwrap()).unwrap(), std::fs::read(y.as_ref().unwrap()).unwrap());
    }

    let err = pipeline::cmd_extract(&wav, &outputs(dir.path(), "c"), None, &config).unwrap_err();
    assert!(err.to_string().contains("extractor"), "{err}");
    let unwritable = ExtractOutputs {
        feat: Some(dir.path().join("missing_dir").join("x.feat")),
        ..ExtractOutputs::default()
    };
    assert!(matches!(pipeline::cmd_extract(&wav, &unwritable, None, &config), Err(Error::Io { .. })));
}

#[test]
fn self_conversion_stays_close_to_the_trained_loss() {
    let dir = tempfile::tempdir().unwrap();
    let (profile, report) = train_profile(dir.path(), 3, 120);
    assert_eq!(report.profile.utterances, 3);
    let trained = report.synthesizer.final_loss().unwrap();

    let loaded = SpeakerProfile::load_with_models(&profile).unwrap();
    assert!(loaded.synthesizer.network == report.synthesizer.network, "reloaded weights differ");
    let wav = dir.path().join("corpus").join("utt0.wav");
    let source = read_wav(&wav).unwrap();
    let (ppg, prosody) = conversion_inputs(&loaded, &source, 1.0).unwrap();
    let converted = synth_forward(&loaded.synthesizer, &ppg, &prosody).unwrap();
    let truth = pipeline::analyze(&source, &loaded.profile.config).unwrap().features;
    let s = &loaded.synthesizer;
    let (err, _) = mse(&s.normalize_targets(&converted.frames), &s.normalize_targets(&truth.frames)).unwrap();
    assert!(err < 2.0 * trained, "self-conversion MSE {err} vs trained loss {trained}");
}

#[test]
fn zero_epoch_adaptation_reproduces_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let (profile, _) = train_profile(dir.path(), 2, 3);
    let init = SpeakerProfile::load(&profile).unwrap().checkpoint_path(&profile);

    let adapted = dir.path().join("adapted.toml");
    let options = TrainSynthOptions {
        init_from: Some(init.clone()),
        ..TrainSynthOptions::default()
    };
    pipeline::cmd_train_synth(&dir.path().join("corpus"), &adapted, &desk_config(0), &options).unwrap();
    let out = SpeakerProfile::load(&adapted).unwrap().checkpoint_path(&adapted);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&init).unwrap());
    assert!(SynthesizerParams::load(&out).unwrap() == SynthesizerParams::load(&init).unwrap());
}

#[test]
fn silent_files_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    target_corpus(&corpus, 2);
    let silence = AudioSignal::new(vec![0.0; 8000], SAMPLE_RATE).unwrap();
    let silent = write_signal(&corpus, "quiet.wav", &silence);
    let report =
        pipeline::cmd_train_synth(&corpus, &dir.path().join("p.toml"), &desk_config(1), &TrainSynthOptions::default())
            .unwrap();
    assert_eq!(report.skipped, vec![silent]);
    assert_eq!(report.profile.utterances, 2);
    assert_eq!(report.profile.skipped, 1);
}

#[test]
fn degenerate_corpora_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let p = dir.path().join("p.toml");
    let opts = TrainSynthOptions::default();
    assert!(matches!(pipeline::cmd_train_synth(&empty, &p, &desk_config(1), &opts), Err(Error::Empty(_))));

    let quiet = dir.path().join("quiet");
    std::fs::create_dir_all(&quiet).unwrap();
    write_signal(&quiet, "a.wav", &AudioSignal::new(vec![0.0; 4000], SAMPLE_RATE).unwrap());
    assert!(matches!(pipeline::cmd_train_synth(&quiet, &p, &desk_config(1), &opts), Err(Error::Degenerate(_))));
}

#[test]
fn untrained_profile_converts_to_the_right_length() {
    let dir = tempfile::tempdir().unwrap();
    let (profile, _) = train_profile(dir.path(), 1, 0);
    for (t, rate, frames) in [(98, 1.0, 98), (100, 0.8, 125), (120, 1.2, 100)] {
        let src = write_signal(dir.path(), &format!("src{t}.wav"), &vowel_frames(t, 120.0, 2));
        let out = dir.path().join(format!("out{t}.wav"));
        let c = pipeline::cmd_convert(&src, &profile, rate, &out, 0).unwrap();
        assert_eq!(c.features.len(), frames);
        let wav = read_wav(&out).unwrap();
        assert_eq!(wav.len(), frames * 160);
        assert!(wav.samples.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn conversion_is_deterministic_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (profile, _) = train_profile(dir.path(), 1, 1);
    let src = write_signal(dir.path(), "src.wav", &vowel_frames(60, 130.0, 3));
    let run = |name: &str, seed| {
        let out = dir.path().join(name);
        pipeline::cmd_convert(&src, &profile, 1.0, &out, seed).unwrap();
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.wav", 5), run("b.wav", 5));
    assert_ne!(run("a.wav", 5), run("c.wav", 6));
}

#[test]
fn conversion_errors() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_signal(dir.path(), "src.wav", &vowel_frames(30, 130.0, 3));
    let out = dir.path().join("o.wav");
    assert!(pipeline::cmd_convert(&src, &dir.path().join("none.toml"), 1.0, &out, 0).is_err());

    let (profile, _) = train_profile(dir.path(), 1, 0);
    let silent = write_signal(dir.path(), "s.wav", &AudioSignal::new(vec![0.0; 4000], SAMPLE_RATE).unwrap());
    assert!(matches!(pipeline::cmd_convert(&silent, &profile, 1.0, &out, 0), Err(Error::Degenerate(_))));
    assert!(pipeline::cmd_convert(&src, &profile, 3.0, &out, 0).is_err());
}

#[test]
fn vocode_writes_hop_times_frames() {
    let dir = tempfile::tempdir().unwrap();
    let wav = write_signal(dir.path(), "v.wav", &vowel_frames(40, 180.0, 0));
    let feat = dir.path().join("v.feat");
    let outs = ExtractOutputs {
        feat: Some(feat.clone()),
        ..ExtractOutputs::default()
    };
    pipeline::cmd_extract(&wav, &outs, None, &PipelineConfig::default()).unwrap();
    let out = dir.path().join("re.wav");
    let s = pipeline::cmd_vocode(&feat, &out, 0).unwrap();
    assert_eq!(s.unstable_frames, 0);
    assert_eq!(read_wav(&out).unwrap().len(), 40 * 160);

    let mfcc = dir.path().join("v.mfcc");
    let outs = ExtractOutputs {
        mfcc: Some(mfcc.clone()),
        ..ExtractOutputs::default()
    };
    pipeline::cmd_extract(&wav, &outs, None, &PipelineConfig::default()).unwrap();
    assert!(matches!(pipeline::cmd_vocode(&mfcc, &out, 0), Err(Error::Shape(_))));
}

#[test]
fn bench_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let (profile, _) = train_profile(dir.path(), 1, 0);
    let csv = pipeline::cmd_bench(&profile, &[64], 5).unwrap().to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], BENCH_CSV_HEADER);
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 5);
        assert_eq!(cols[1], "64");
        assert!(cols[4].parse::<f64>().unwrap() > 1.0, "{line}");
    }
    let again = pipeline::cmd_bench(&profile, &[64], 5).unwrap().to_csv();
    let schema = |c: &str| c.lines().map(|l| l.split(',').count()).collect::<Vec<_>>();
    assert_eq!(schema(&again), schema(&csv));
    assert_eq!(pipeline::cmd_bench(&profile, &[], 5).unwrap().to_csv().trim_end(), BENCH_CSV_HEADER);
}

#[test]
fn samples_helper_matches_the_grid() {
    for t in [1, 2, 98, 150] {
        assert_eq!(fsvc::dsp::FrameGrid::new(25.0, 10.0, samples_for_frames(t)).unwrap().n_frames, t);
    }
}

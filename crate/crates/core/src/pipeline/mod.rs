//! Two-stage workflow: analysis, extractor and synthesizer training, and
//! conversion of a source utterance into the target voice.

pub mod profile;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dsp::pitch::stats_of;
use crate::dsp::{
    compute_bark_features, compute_mfcc, estimate_f0, frame_signal, normalize_log_f0, AudioSignal,
    FrameGrid, LpcnetFeatureSequence, MfccSequence, ProsodyTrack, FEATURE_DIM,
};
use crate::error::{Error, Result};
use crate::io::wav::{read_wav, write_wav};
use crate::io::{FeatureFile, PipelineConfig};
use crate::nn::Tensor2;
use crate::ppg::{extract_ppg, save_ppg_file, train_ppg_extractor, PpgExtractorParams, PpgSequence};
use crate::synth::{
    build_synthesizer, resample_for_rate, synth_forward, train_synthesizer, BenchReport,
    SynthesizerParams, TrainingExample,
};
use crate::vocoder::{lpc_synthesize, Synthesis};

pub use profile::{LoadedProfile, SpeakerProfile};

/// Frame-synchronous analysis of one utterance.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub grid: FrameGrid,
    pub mfcc: MfccSequence,
    /// Raw (unnormalized) log-F0 track.
    pub prosody: ProsodyTrack,
    pub features: LpcnetFeatureSequence,
}

pub fn analyze(signal: &AudioSignal, config: &PipelineConfig) -> Result<Analysis> {
    let (grid, frames) = frame_signal(signal, config.window_ms, config.hop_ms)?;
    let mfcc = compute_mfcc(&frames, &grid)?;
    let prosody = estimate_f0(signal, &grid)?;
    let features = compute_bark_features(&frames, &grid, &prosody)?;
    Ok(Analysis {
        grid,
        mfcc,
        prosody,
        features,
    })
}

/// `[log_f0, voicing, pitch_corr]` per frame, the layout of prosody files.
pub fn prosody_to_matrix(p: &ProsodyTrack) -> Tensor2 {
    let mut m = Tensor2::zeros(p.len(), 3);
    for t in 0..p.len() {
        m[(t, 0)] = p.log_f0[t];
        m[(t, 1)] = f64::from(u8::from(p.voicing[t]));
        m[(t, 2)] = p.pitch_corr[t];
    }
    m
}

pub fn prosody_from_matrix(m: &Tensor2) -> Result<ProsodyTrack> {
    if m.cols() != 3 {
        return Err(Error::Shape(format!("prosody files have 3 columns, found {}", m.cols())));
    }
    Ok(ProsodyTrack {
        log_f0: (0..m.rows()).map(|t| m[(t, 0)]).collect(),
        voicing: (0..m.rows()).map(|t| m[(t, 1)] >= 0.5).collect(),
        pitch_corr: (0..m.rows()).map(|t| m[(t, 2)]).collect(),
        stats: None,
    })
}

/// Which files `cmd_extract` writes.
#[derive(Debug, Clone, Default)]
pub struct ExtractOutputs {
    pub mfcc: Option<PathBuf>,
    pub ppg: Option<PathBuf>,
    pub prosody: Option<PathBuf>,
    pub feat: Option<PathBuf>,
}

pub fn cmd_extract(
    wav_in: &Path,
    outputs: &ExtractOutputs,
    extractor: Option<&Path>,
    config: &PipelineConfig,
) -> Result<Analysis> {
    let model = match (&outputs.ppg, extractor) {
        (Some(_), None) => {
            return Err(Error::InvalidArgument(
                "PPG output requested without an extractor model".into(),
            ))
        }
        (Some(_), Some(path)) => Some(PpgExtractorParams::load(path)?),
        (None, _) => None,
    };
    let a = analyze(&read_wav(wav_in)?, config)?;
    if let Some(path) = &outputs.mfcc {
        FeatureFile::new(a.mfcc.frames.clone(), &a.grid).save(path)?;
    }
    if let (Some(path), Some(model)) = (&outputs.ppg, &model) {
        save_ppg_file(&extract_ppg(model, &a.mfcc)?, path)?;
    }
    if let Some(path) = &outputs.prosody {
        FeatureFile::new(prosody_to_matrix(&a.prosody), &a.grid).save(path)?;
    }
    if let Some(path) = &outputs.feat {
        FeatureFile::new(a.features.frames.clone(), &a.grid).save(path)?;
    }
    Ok(a)
}

/// `*.wav` files directly inside `dir`, sorted by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Empty(format!("no .wav files in {}", dir.display())));
    }
    Ok(files)
}

/// Whitespace-separated per-frame class ids.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.split_whitespace()
        .map(|tok| {
            tok.parse().map_err(|_| Error::Format {
                path: path.display().to_string(),
                message: format!("bad class id {tok:?}"),
            })
        })
        .collect()
}

/// Trains the extractor on every `x.wav` in `corpus_dir` that has an
/// `x.lab` label file next to it.
pub fn cmd_train_ppg(corpus_dir: &Path, model_out: &Path, config: &PipelineConfig) -> Result<PpgExtractorParams> {
    let files: Vec<PathBuf> = corpus_files(corpus_dir)?
        .into_iter()
        .filter(|f| f.with_extension("lab").exists())
        .collect();
    if files.is_empty() {
        return Err(Error::Empty(format!(
            "no labelled .wav/.lab pairs in {}",
            corpus_dir.display()
        )));
    }
    let data: Vec<(MfccSequence, Vec<usize>)> = files
        .par_iter()
        .map(|f| {
            let a = analyze(&read_wav(f)?, config)?;
            Ok((a.mfcc, read_labels(&f.with_extension("lab"))?))
        })
        .collect::<Result<_>>()?;
    let (mfcc, labels): (Vec<_>, Vec<_>) = data.into_iter().unzip();
    let params = train_ppg_extractor(&mfcc, &labels, &config.ppg_train_config())?;
    params.save(model_out)?;
    Ok(params)
}

#[derive(Debug, Clone, Default)]
pub struct TrainSynthOptions {
    pub speaker_id: Option<String>,
    pub init_from: Option<PathBuf>,
    /// Trained extractor; a fresh seeded one is used when absent.
    pub extractor: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct TrainSynthReport {
    pub profile: SpeakerProfile,
    pub synthesizer: SynthesizerParams,
    pub skipped: Vec<PathBuf>,
}

fn sibling(profile_out: &Path, suffix: &str) -> PathBuf {
    let stem = profile_out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "profile".into());
    profile_out.with_file_name(format!("{stem}.{suffix}"))
}

/// Builds a speaker profile from a directory of target-speaker recordings.
pub fn cmd_train_synth(
    corpus_dir: &Path,
    profile_out: &Path,
    config: &PipelineConfig,
    options: &TrainSynthOptions,
) -> Result<TrainSynthReport> {
    let files = corpus_files(corpus_dir)?;
    let analyses: Vec<Analysis> = files
        .par_iter()
        .map(|f| analyze(&read_wav(f)?, config))
        .collect::<Result<_>>()?;

    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    for (file, a) in files.iter().zip(analyses) {
        if a.prosody.voiced_count() < 2 {
            log::warn!("skipping {}: no voiced frames", file.display());
            skipped.push(file.clone());
        } else {
            kept.push(a);
        }
    }
    if kept.is_empty() {
        return Err(Error::Degenerate("no utterance in the corpus has voiced frames".into()));
    }
    let voiced: Vec<f64> = kept
        .iter()
        .flat_map(|a| {
            a.prosody
                .log_f0
                .iter()
                .zip(&a.prosody.voicing)
                .filter(|(_, &v)| v)
                .map(|(&f, _)| f)
        })
        .collect();
    let stats = stats_of(&voiced)?;

    let extractor = match &options.extractor {
        Some(path) => PpgExtractorParams::load(path)?,
        None => PpgExtractorParams::new(config.ppg_classes, config.ppg_hidden, config.seed)?,
    };
    let dataset: Vec<TrainingExample> = kept
        .par_iter()
        .map(|a| {
            Ok(TrainingExample {
                ppg: extract_ppg(&extractor, &a.mfcc)?,
                prosody: normalize_log_f0(&a.prosody, Some(stats))?,
                target: a.features.clone(),
            })
        })
        .collect::<Result<_>>()?;

    let mut train = config.synth_train_config();
    train.init_from = options.init_from.clone();
    let mut initial = build_synthesizer(&config.synth_config(extractor.n_classes()))?;
    initial.fit_output_normalization(dataset.iter().map(|ex| &ex.target.frames));
    let synthesizer = train_synthesizer(initial, &dataset, &train)?;

    let checkpoint = sibling(profile_out, "synth.fvcm");
    let extractor_path = sibling(profile_out, "ppg.fvcm");
    synthesizer.save(&checkpoint)?;
    extractor.save(&extractor_path)?;
    let file_name = |p: &Path| PathBuf::from(p.file_name().expect("sibling has a file name"));
    let profile = SpeakerProfile {
        speaker_id: options.speaker_id.clone().unwrap_or_else(|| {
            corpus_dir
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "speaker".into())
        }),
        log_f0_mean: stats.0,
        log_f0_std: stats.1,
        checkpoint: file_name(&checkpoint),
        extractor: file_name(&extractor_path),
        utterances: dataset.len(),
        skipped: skipped.len(),
        seed: config.seed,
        config: config.clone(),
    };
    profile.save(profile_out)?;
    Ok(TrainSynthReport {
        profile,
        synthesizer,
        skipped,
    })
}

/// Synthesizer input for a source utterance: PPG plus log-F0 normalized by
/// the utterance's own voiced statistics, rate-adjusted.
pub fn conversion_inputs(
    loaded: &LoadedProfile,
    source: &AudioSignal,
    rate: f64,
) -> Result<(PpgSequence, ProsodyTrack)> {
    let a = analyze(source, &loaded.profile.config)?;
    let ppg = extract_ppg(&loaded.extractor, &a.mfcc)?;
    let prosody = normalize_log_f0(&a.prosody, None)?;
    if rate == 1.0 {
        Ok((ppg, prosody))
    } else {
        resample_for_rate(&ppg, &prosody, rate)
    }
}

#[derive(Debug, Clone)]
pub struct Conversion {
    pub features: LpcnetFeatureSequence,
    pub synthesis: Synthesis,
}

pub fn convert_signal(loaded: &LoadedProfile, source: &AudioSignal, rate: f64, seed: u64) -> Result<Conversion> {
    let (ppg, prosody) = conversion_inputs(loaded, source, rate)?;
    let features = synth_forward(&loaded.synthesizer, &ppg, &prosody)?;
    let synthesis = lpc_synthesize(&features, &features.grid, seed)?;
    Ok(Conversion { features, synthesis })
}

pub fn cmd_convert(source_wav: &Path, profile: &Path, rate: f64, wav_out: &Path, seed: u64) -> Result<Conversion> {
    let loaded = SpeakerProfile::load_with_models(profile)?;
    let conv = convert_signal(&loaded, &read_wav(source_wav)?, rate, seed)?;
    write_wav(&conv.synthesis.signal, wav_out)?;
    Ok(conv)
}

/// Vocodes a 20-column feature file.
pub fn cmd_vocode(feat_in: &Path, wav_out: &Path, seed: u64) -> Result<Synthesis> {
    let file = FeatureFile::load(feat_in)?;
    if file.matrix.cols() != FEATURE_DIM {
        return Err(Error::Shape(format!(
            "{} holds {}-dim frames, the vocoder needs {FEATURE_DIM}",
            feat_in.display(),
            file.matrix.cols()
        )));
    }
    let grid = file.grid()?;
    let features = LpcnetFeatureSequence::new(file.matrix, grid)?;
    let synthesis = lpc_synthesize(&features, &grid, seed)?;
    write_wav(&synthesis.signal, wav_out)?;
    Ok(synthesis)
}

pub fn cmd_bench(profile: &Path, lengths: &[usize], repeats: usize) -> Result<BenchReport> {
    let p = SpeakerProfile::load(profile)?;
    let params = SynthesizerParams::load(&p.checkpoint_path(profile))?;
    BenchReport::run(&params, lengths, repeats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prosody_matrix_round_trips() {
        let p = ProsodyTrack {
            log_f0: vec![4.6, 5.0, 5.3],
            voicing: vec![true, false, true],
            pitch_corr: vec![0.9, 0.1, 0.7],
            stats: None,
        };
        assert_eq!(prosody_from_matrix(&prosody_to_matrix(&p)).unwrap(), p);
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("/x/alice.toml"), "synth.fvcm"), Path::new("/x/alice.synth.fvcm"));
    }
}

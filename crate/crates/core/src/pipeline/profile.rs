use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::PipelineConfig;
use crate::ppg::PpgExtractorParams;
use crate::synth::SynthesizerParams;

/// Everything needed to convert into one target speaker. Model paths are
/// stored relative to the profile file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeakerProfile {
    pub speaker_id: String,
    /// Mean and population std of voiced log-F0 over the training corpus.
    pub log_f0_mean: f64,
    pub log_f0_std: f64,
    pub checkpoint: PathBuf,
    pub extractor: PathBuf,
    pub utterances: usize,
    pub skipped: usize,
    pub seed: u64,
    pub config: PipelineConfig,
}

/// A profile with its models loaded.
#[derive(Debug, Clone)]
pub struct LoadedProfile {
    pub profile: SpeakerProfile,
    pub synthesizer: SynthesizerParams,
    pub extractor: PpgExtractorParams,
}

impl SpeakerProfile {
    pub fn stats(&self) -> (f64, f64) {
        (self.log_f0_mean, self.log_f0_std)
    }

    fn resolve(base: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.parent().unwrap_or(Path::new(".")).join(p)
        }
    }

    pub fn checkpoint_path(&self, profile_path: &Path) -> PathBuf {
        Self::resolve(profile_path, &self.checkpoint)
    }

    pub fn extractor_path(&self, profile_path: &Path) -> PathBuf {
        Self::resolve(profile_path, &self.extractor)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.log_f0_std.is_finite() && self.log_f0_std > 1e-8) || !self.log_f0_mean.is_finite() {
            return Err(Error::Degenerate(format!(
                "profile log-F0 stats ({}, {}) are unusable",
                self.log_f0_mean, self.log_f0_std
            )));
        }
        self.config.validate()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: Self = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        p.validate()?;
        Ok(p)
    }

    /// Loads the profile and both models it references.
    pub fn load_with_models(path: &Path) -> Result<LoadedProfile> {
        let profile = Self::load(path)?;
        let synthesizer = SynthesizerParams::load(&profile.checkpoint_path(path))?;
        let extractor = PpgExtractorParams::load(&profile.extractor_path(path))?;
        if extractor.n_classes() != synthesizer.config.ppg_classes {
            return Err(Error::Shape(format!(
                "extractor emits {} classes but the synthesizer expects {}",
                extractor.n_classes(),
                synthesizer.config.ppg_classes
            )));
        }
        Ok(LoadedProfile {
            profile,
            synthesizer,
            extractor,
        })
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::FrameGrid;
use crate::error::{Error, Result};
use crate::ppg::{PpgTrainConfig, DEFAULT_CLASSES, DEFAULT_HIDDEN};
use crate::synth::rate::check_rate;
use crate::synth::{SynthTrainConfig, SynthesizerConfig};
use crate::vocoder::LPC_ORDER;

/// Every tunable of the pipeline as one flat TOML table. Missing keys take
/// their defaults; unknown keys are an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub window_ms: f64,
    pub hop_ms: f64,

    pub ppg_classes: usize,
    pub ppg_hidden: usize,
    pub ppg_epochs: usize,
    pub ppg_batch_size: usize,
    pub ppg_learning_rate: f64,

    pub model_dim: usize,
    pub n_blocks: usize,
    pub n_heads: usize,
    pub conv_kernel: usize,
    /// Defaults to `4 · model_dim` when absent.
    pub conv_hidden: Option<usize>,
    pub synth_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Synthesizer steps per halving of the learning rate; constant if absent.
    pub lr_half_life: Option<usize>,

    pub lpc_order: usize,
    pub rate: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let synth = SynthesizerConfig::default();
        let ppg = PpgTrainConfig::default();
        let train = SynthTrainConfig::default();
        Self {
            window_ms: FrameGrid::DEFAULT_WINDOW_MS,
            hop_ms: FrameGrid::DEFAULT_HOP_MS,
            ppg_classes: DEFAULT_CLASSES,
            ppg_hidden: DEFAULT_HIDDEN,
            ppg_epochs: ppg.epochs,
            ppg_batch_size: ppg.batch_size,
            ppg_learning_rate: ppg.learning_rate,
            model_dim: synth.model_dim,
            n_blocks: synth.n_blocks,
            n_heads: synth.n_heads,
            conv_kernel: synth.conv_kernel,
            conv_hidden: None,
            synth_epochs: train.epochs,
            batch_size: train.batch_size,
            learning_rate: train.learning_rate,
            lr_half_life: train.lr_half_life,
            lpc_order: LPC_ORDER,
            rate: 1.0,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.grid(0)?;
        if self.lpc_order != LPC_ORDER {
            return bad(format!("lpc_order must be {LPC_ORDER}, got {}", self.lpc_order));
        }
        if self.ppg_classes == 0 || self.ppg_hidden == 0 {
            return bad("ppg_classes and ppg_hidden must be positive".into());
        }
        if self.ppg_batch_size == 0 || self.batch_size == 0 {
            return bad("batch sizes must be positive".into());
        }
        for (name, lr) in [("ppg_learning_rate", self.ppg_learning_rate), ("learning_rate", self.learning_rate)] {
            if !(lr.is_finite() && lr > 0.0) {
                return bad(format!("{name} must be positive, got {lr}"));
            }
        }
        if self.lr_half_life == Some(0) {
            return bad("lr_half_life must be positive".into());
        }
        check_rate(self.rate).map_err(|e| Error::Config(e.to_string()))?;
        self.synth_config(self.ppg_classes)
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self, n_frames: usize) -> Result<FrameGrid> {
        FrameGrid::with_frames(self.window_ms, self.hop_ms, n_frames)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn synth_config(&self, ppg_classes: usize) -> SynthesizerConfig {
        let mut c = SynthesizerConfig::with_dims(ppg_classes, self.model_dim, self.n_blocks, self.n_heads)
            .with_seed(self.seed);
        c.conv_kernel = self.conv_kernel;
        c.conv_hidden = self.conv_hidden.unwrap_or(4 * self.model_dim);
        c
    }

    pub fn ppg_train_config(&self) -> PpgTrainConfig {
        PpgTrainConfig {
            n_classes: self.ppg_classes,
            hidden: self.ppg_hidden,
            epochs: self.ppg_epochs,
            batch_size: self.ppg_batch_size,
            learning_rate: self.ppg_learning_rate,
            seed: self.seed,
        }
    }

    pub fn synth_train_config(&self) -> SynthTrainConfig {
        SynthTrainConfig {
            epochs: self.synth_epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            lr_half_life: self.lr_half_life,
            seed: self.seed,
            init_from: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = PipelineConfig::default();
        assert_eq!(PipelineConfig::parse(&c.to_toml()).unwrap(), c);
        assert_eq!(PipelineConfig::parse("").unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = PipelineConfig::parse("model_dim = 32\nwarp_factor = 9\n").unwrap_err();
        assert!(err.to_string().contains("warp_factor"), "{err}");
    }

    #[test]
    fn values_are_validated() {
        assert!(PipelineConfig::parse("model_dim = 65").is_err());
        assert!(PipelineConfig::parse("rate = 3.0").is_err());
        assert!(PipelineConfig::parse("hop_ms = 30.0").is_err());
        assert!(PipelineConfig::parse("lpc_order = 10").is_err());
        assert!(PipelineConfig::parse("model_dim = \"big\"").is_err());
    }
}

use crate::dsp::FEATURE_DIM;
use crate::error::{Error, Result};
use crate::io::format::ModelFile;
use crate::ppg::DEFAULT_CLASSES;

/// Shape of the encoder/decoder network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesizerConfig {
    pub n_blocks: usize,
    pub model_dim: usize,
    pub n_heads: usize,
    pub conv_kernel: usize,
    pub conv_hidden: usize,
    pub ppg_classes: usize,
    /// Normalized log-F0 and voicing.
    pub prosody_dim: usize,
    pub out_dim: usize,
    pub seed: u64,
}

impl Default for SynthesizerConfig {
    fn default() -> Self {
        Self::desk(DEFAULT_CLASSES)
    }
}

impl SynthesizerConfig {
    /// D = 64, two blocks, two heads.
    pub fn desk(ppg_classes: usize) -> Self {
        Self::with_dims(ppg_classes, 64, 2, 2)
    }

    /// D = 512, six blocks, four heads.
    pub fn full(ppg_classes: usize) -> Self {
        Self::with_dims(ppg_classes, 512, 6, 4)
    }

    pub fn with_dims(ppg_classes: usize, model_dim: usize, n_blocks: usize, n_heads: usize) -> Self {
        Self {
            n_blocks,
            model_dim,
            n_heads,
            conv_kernel: 3,
            conv_hidden: 4 * model_dim,
            ppg_classes,
            prosody_dim: 2,
            out_dim: FEATURE_DIM,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.model_dim == 0 || self.n_heads == 0 || !self.model_dim.is_multiple_of(self.n_heads) {
            return bad(format!(
                "model_dim {} must be a positive multiple of n_heads {}",
                self.model_dim, self.n_heads
            ));
        }
        if !self.model_dim.is_multiple_of(2) {
            return bad(format!("model_dim {} must be even for position encoding", self.model_dim));
        }
        if self.conv_kernel.is_multiple_of(2) {
            return bad(format!("conv_kernel {} must be odd", self.conv_kernel));
        }
        if self.conv_hidden == 0 || self.ppg_classes == 0 {
            return bad("conv_hidden and ppg_classes must be positive".into());
        }
        if self.prosody_dim != 2 {
            return bad(format!("prosody_dim must be 2, got {}", self.prosody_dim));
        }
        if self.out_dim != FEATURE_DIM {
            return bad(format!("out_dim must be {FEATURE_DIM}, got {}", self.out_dim));
        }
        Ok(())
    }

    /// Closed-form count of trainable scalars.
    pub fn param_count(&self) -> usize {
        let (d, h, k) = (self.model_dim, self.conv_hidden, self.conv_kernel);
        let block = 4 * (d * d + d) + 2 * d + (k * d * h + h) + (k * h * d + d) + 2 * d;
        (self.ppg_classes * d + d)
            + 2 * d
            + 2 * self.n_blocks * block
            + ((d + self.prosody_dim) * d + d)
            + (d * self.out_dim + self.out_dim)
    }

    pub(crate) fn write_metadata(&self, m: &mut ModelFile) {
        m.set("n_blocks", self.n_blocks);
        m.set("model_dim", self.model_dim);
        m.set("n_heads", self.n_heads);
        m.set("conv_kernel", self.conv_kernel);
        m.set("conv_hidden", self.conv_hidden);
        m.set("ppg_classes", self.ppg_classes);
        m.set("prosody_dim", self.prosody_dim);
        m.set("out_dim", self.out_dim);
        m.set("seed", self.seed);
    }

    pub(crate) fn read_metadata(m: &ModelFile) -> Result<Self> {
        Ok(Self {
            n_blocks: m.parse("n_blocks")?,
            model_dim: m.parse("model_dim")?,
            n_heads: m.parse("n_heads")?,
            conv_kernel: m.parse("conv_kernel")?,
            conv_hidden: m.parse("conv_hidden")?,
            ppg_classes: m.parse("ppg_classes")?,
            prosody_dim: m.parse("prosody_dim")?,
            out_dim: m.parse("out_dim")?,
            seed: m.parse("seed")?,
        })
    }
}

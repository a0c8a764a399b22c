//! File formats: WAV, the binary feature/model containers and the config
//! document.

pub mod config;
pub mod format;
pub mod wav;

pub use config::PipelineConfig;
pub use format::{FeatureFile, ModelFile};
pub use wav::{read_wav, write_wav};

//! Signal analysis: framing, MFCCs, F0 tracking and Bark cepstra.

pub mod audio;
pub mod bark;
pub mod dct;
pub mod mfcc;
pub mod pitch;
pub mod spectrum;
pub mod synthetic;

pub use audio::{frame_signal, hann, AudioSignal, FrameGrid, SAMPLE_RATE};
pub use bark::{compute_bark_features, LpcnetFeatureSequence, FEATURE_DIM, N_BARK_BANDS};
pub use mfcc::{compute_mfcc, MfccSequence, MFCC_DIM};
pub use pitch::{estimate_f0, normalize_log_f0, voiced_log_f0_stats, ProsodyTrack};

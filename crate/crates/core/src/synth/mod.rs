//! Non-autoregressive PPG-to-feature synthesizer.

pub mod bench;
pub mod config;
pub mod model;
pub mod rate;
pub mod train;

pub use bench::{benchmark_inference, BenchMode, BenchReport, BenchRow, BenchTiming, BENCH_CSV_HEADER};
pub use config::SynthesizerConfig;
pub use model::{build_synthesizer, prosody_matrix, synth_forward, FftBlock, SynthNetwork, SynthesizerParams};
pub use rate::resample_for_rate;
pub use train::{dataset_loss, mse, train_synthesizer, SynthTrainConfig, TrainingExample};

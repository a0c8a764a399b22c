//! The six-block, 512-wide configuration: parameter count from the closed
//! form and from the built network, plus one forward pass.
//!
//!     cargo run --release --example full_scale_model

use std::time::Instant;

use fsvc::nn::Parameters;
use fsvc::synth::bench::bench_inputs;
use fsvc::synth::{build_synthesizer, synth_forward, SynthesizerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for config in [SynthesizerConfig::desk(64), SynthesizerConfig::full(64)] {
        let params = build_synthesizer(&config)?;
        let (ppg, prosody) = bench_inputs(&params, 200, 0)?;
        let start = Instant::now();
        let out = synth_forward(&params, &ppg, &prosody)?;
        println!(
            "D={:<3} N={} heads={}: {:>9} parameters (closed form {:>9}), 200 frames in {:.1} ms -> {:?}",
            config.model_dim,
            config.n_blocks,
            config.n_heads,
            params.network.num_params(),
            config.param_count(),
            start.elapsed().as_secs_f64() * 1e3,
            out.frames.shape()
        );
    }
    Ok(())
}

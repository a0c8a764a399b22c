//! Parallel generation against autoregressive emulation at several
//! sequence lengths, printed as the `fsvc bench` CSV.
//!
//!     cargo run --release --example latency_bench

use fsvc::synth::{build_synthesizer, BenchReport, SynthesizerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = build_synthesizer(&SynthesizerConfig::default())?;
    let report = BenchReport::run(&params, &[32, 64, 128, 256], 3)?;
    print!("{}", report.to_csv());
    Ok(())
}

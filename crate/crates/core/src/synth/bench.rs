use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{prosody_matrix, to_features, SynthesizerParams};
use crate::dsp::{FrameGrid, LpcnetFeatureSequence, ProsodyTrack};
use crate::error::{Error, Result};
use crate::nn::Tensor2;
use crate::ppg::{floor_and_log, PpgSequence};

pub const MIN_BENCH_FRAMES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    /// One forward pass over the whole sequence.
    Parallel,
    /// Frame `t` from a decoder pass over the prefix `0..=t`.
    ArEmulation,
}

impl fmt::Display for BenchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchMode::Parallel => "parallel",
            BenchMode::ArEmulation => "ar_emulation",
        })
    }
}

impl FromStr for BenchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parallel" => Ok(BenchMode::Parallel),
            "ar_emulation" | "ar" => Ok(BenchMode::ArEmulation),
            _ => Err(Error::InvalidArgument(format!("unknown bench mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchTiming {
    pub mode: BenchMode,
    pub frames: usize,
    pub samples_ms: Vec<f64>,
    pub median_ms: f64,
    pub p90_ms: f64,
    pub output: LpcnetFeatureSequence,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Random but valid synthesizer input of `frames` frames.
pub fn bench_inputs(params: &SynthesizerParams, frames: usize, seed: u64) -> Result<(PpgSequence, ProsodyTrack)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = params.config.ppg_classes;
    let mut probs = Tensor2::zeros(frames, k);
    for r in 0..frames {
        let row = probs.row_mut(r);
        row.iter_mut().for_each(|v| *v = rng.random::<f64>().powi(4));
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    floor_and_log(&mut probs);
    let grid = FrameGrid::with_frames(25.0, 10.0, frames)?;
    let prosody = ProsodyTrack {
        log_f0: (0..frames).map(|t| (t as f64 * 0.05).sin()).collect(),
        voicing: (0..frames).map(|t| t % 7 != 0).collect(),
        pitch_corr: vec![0.8; frames],
        stats: Some((5.0, 0.2)),
    };
    Ok((PpgSequence::new(probs, grid)?, prosody))
}

/// Times `repeats` feature generations of a `frames`-long random input.
pub fn benchmark_inference(
    params: &SynthesizerParams,
    frames: usize,
    mode: BenchMode,
    repeats: usize,
) -> Result<BenchTiming> {
    if frames < MIN_BENCH_FRAMES {
        return Err(Error::InvalidArgument(format!(
            "benchmark needs at least {MIN_BENCH_FRAMES} frames, got {frames}"
        )));
    }
    if repeats == 0 {
        return Err(Error::InvalidArgument("benchmark needs at least one repeat".into()));
    }
    let (ppg, prosody) = bench_inputs(params, frames, frames as u64)?;
    let (x, p) = (ppg.log_post.clone(), prosody_matrix(&prosody)?);
    let mut samples = Vec::with_capacity(repeats);
    let mut raw = Tensor2::zeros(0, 0);
    for _ in 0..repeats {
        let start = Instant::now();
        raw = match mode {
            BenchMode::Parallel => params.network.forward(&x, &p)?.0,
            BenchMode::ArEmulation => params.network.forward_prefix_decoding(&x, &p)?,
        };
        samples.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BenchTiming {
        mode,
        frames,
        median_ms: median(&sorted),
        p90_ms: percentile(&sorted, 90.0),
        samples_ms: samples,
        output: to_features(params, &raw, &ppg)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub mode: BenchMode,
    pub frames: usize,
    pub median_ms: f64,
    pub p90_ms: f64,
    /// Median AR-emulation time over median parallel time at this length.
    pub speedup: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

pub const BENCH_CSV_HEADER: &str = "mode,T,median_ms,p90_ms,speedup";

impl BenchReport {
    /// Both modes at every length in `lengths`.
    pub fn run(params: &SynthesizerParams, lengths: &[usize], repeats: usize) -> Result<Self> {
        let mut rows = Vec::with_capacity(2 * lengths.len());
        for &t in lengths {
            let par = benchmark_inference(params, t, BenchMode::Parallel, repeats)?;
            let ar = benchmark_inference(params, t, BenchMode::ArEmulation, repeats)?;
            let speedup = ar.median_ms / par.median_ms.max(1e-9);
            for timing in [par, ar] {
                rows.push(BenchRow {
                    mode: timing.mode,
                    frames: t,
                    median_ms: timing.median_ms,
                    p90_ms: timing.p90_ms,
                    speedup,
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(BENCH_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:.4},{:.4},{:.3}\n",
                r.mode, r.frames, r.median_ms, r.p90_ms, r.speedup
            ));
        }
        s
    }
}

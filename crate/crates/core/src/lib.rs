pub mod dsp;
pub mod error;
pub mod io;
pub mod nn;
pub mod pipeline;
pub mod ppg;
pub mod synth;
pub mod vocoder;

pub use error::{Error, Result};

//! Recover the coefficients of an AR(2) process from its Bark cepstra, and
//! compare Levinson-Durbin against a direct autocorrelation solve.
//!
//!     cargo run --example lpc_analysis

use fsvc::dsp::bark::log_band_energies;
use fsvc::dsp::dct::{dct, dct_matrix};
use fsvc::dsp::synthetic::ar_process;
use fsvc::dsp::{frame_signal, AudioSignal, FrameGrid, FEATURE_DIM, N_BARK_BANDS, SAMPLE_RATE};
use fsvc::vocoder::{cepstra_to_lpc, levinson_durbin};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (a1, a2) = (1.3, -0.6);
    let x = ar_process(&[a1, a2], 4 * SAMPLE_RATE as usize, 11);

    let r: Vec<f64> = (0..=2)
        .map(|lag| x[lag..].iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() / x.len() as f64)
        .collect();
    let direct = levinson_durbin(&r)?;
    println!("time-domain Levinson: a = [{:.4}, {:.4}]", direct.lpc[0], direct.lpc[1]);

    let signal = AudioSignal::new(x, SAMPLE_RATE)?;
    let (grid, frames) = frame_signal(&signal, FrameGrid::DEFAULT_WINDOW_MS, FrameGrid::DEFAULT_HOP_MS)?;
    let bands = log_band_energies(&frames, &grid)?;
    let mut mean_power = [0.0; N_BARK_BANDS];
    for row in bands.iter_rows() {
        for (m, v) in mean_power.iter_mut().zip(row) {
            *m += v.exp() / bands.rows() as f64;
        }
    }
    let log_power: Vec<f64> = mean_power.iter().map(|p| p.ln()).collect();
    let mut frame = dct(&dct_matrix(N_BARK_BANDS, N_BARK_BANDS), &log_power);
    frame.resize(FEATURE_DIM, 0.0);

    let lpc = cepstra_to_lpc(&frame)?;
    println!(
        "from Bark cepstra:    a = [{:.4}, {:.4}], largest higher-order |a| {:.4}",
        lpc.lpc[0],
        lpc.lpc[1],
        lpc.lpc[2..].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    );
    println!("generator:            a = [{a1}, {a2}]");
    Ok(())
}

use crate::dsp::ProsodyTrack;
use crate::error::{Error, Result};
use crate::nn::Tensor2;
use crate::ppg::{floor_and_log, PpgSequence};

pub const MIN_RATE: f64 = 0.5;
pub const MAX_RATE: f64 = 2.0;

/// Frame count after rate control; `rate > 1` is faster speech.
pub fn output_frames(n_frames: usize, rate: f64) -> usize {
    ((n_frames as f64 / rate).round() as usize).max(1)
}

pub fn check_rate(rate: f64) -> Result<()> {
    if !(MIN_RATE..=MAX_RATE).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "rate {rate} outside [{MIN_RATE}, {MAX_RATE}]"
        )));
    }
    Ok(())
}

/// Source positions for each output frame, with both endpoints aligned.
fn positions(t_in: usize, t_out: usize) -> Vec<f64> {
    if t_out == 1 {
        return vec![0.0];
    }
    (0..t_out)
        .map(|j| (j * (t_in - 1)) as f64 / (t_out - 1) as f64)
        .collect()
}

fn bracket(s: f64, len: usize) -> (usize, usize, f64) {
    let i0 = (s.floor() as usize).min(len - 1);
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, s - i0 as f64)
}

fn lerp(v: &[f64], s: f64) -> f64 {
    let (i0, i1, frac) = bracket(s, v.len());
    if frac == 0.0 {
        v[i0]
    } else {
        v[i0] * (1.0 - frac) + v[i1] * frac
    }
}

/// Stretches or compresses a PPG/prosody pair to `round(T / rate)` frames.
pub fn resample_for_rate(
    ppg: &PpgSequence,
    prosody: &ProsodyTrack,
    rate: f64,
) -> Result<(PpgSequence, ProsodyTrack)> {
    check_rate(rate)?;
    prosody.check_consistent()?;
    let t_in = ppg.len();
    if prosody.len() != t_in {
        return Err(Error::Shape(format!(
            "{t_in} PPG frames but {} prosody frames",
            prosody.len()
        )));
    }
    if t_in == 0 {
        return Err(Error::Empty("rate control on an empty sequence".into()));
    }
    let t_out = output_frames(t_in, rate);
    let pos = positions(t_in, t_out);
    let k = ppg.n_classes();

    let mut log_post = Tensor2::zeros(t_out, k);
    let mut needs_log = Vec::with_capacity(t_out);
    for (j, &s) in pos.iter().enumerate() {
        let (i0, i1, frac) = bracket(s, t_in);
        let row = log_post.row_mut(j);
        if frac == 0.0 {
            row.copy_from_slice(ppg.log_post.row(i0));
            needs_log.push(false);
        } else {
            let (a, b) = (ppg.log_post.row(i0), ppg.log_post.row(i1));
            for c in 0..k {
                row[c] = a[c].exp() * (1.0 - frac) + b[c].exp() * frac;
            }
            needs_log.push(true);
        }
    }
    for (j, &relog) in needs_log.iter().enumerate() {
        if relog {
            let mut row = log_post.slice_rows(j, 1);
            floor_and_log(&mut row);
            log_post.row_mut(j).copy_from_slice(row.row(0));
        }
    }

    let out_prosody = ProsodyTrack {
        log_f0: pos.iter().map(|&s| lerp(&prosody.log_f0, s)).collect(),
        voicing: pos
            .iter()
            .map(|&s| prosody.voicing[(s.round() as usize).min(t_in - 1)])
            .collect(),
        pitch_corr: pos.iter().map(|&s| lerp(&prosody.pitch_corr, s)).collect(),
        stats: prosody.stats,
    };
    let grid = ppg.grid.resized(t_out);
    Ok((PpgSequence::new(log_post, grid)?, out_prosody))
}

//! Independent oracles for the signal-analysis front end and LP analysis.

mod common;

use fsvc::dsp::bark::bark_filterbank;
use fsvc::dsp::dct::{dct, dct_matrix};
use fsvc::dsp::mfcc::{log_mel_energies, N_CEPS, N_MEL_FILTERS};
use fsvc::dsp::pitch::{lag_range, normalized_autocorr};
use fsvc::dsp::spectrum::PowerSpectrum;
use fsvc::dsp::synthetic::{ar_process, tone, white_noise};
use fsvc::dsp::{
    compute_bark_features, compute_mfcc, estimate_f0, frame_signal, normalize_log_f0, AudioSignal, FrameGrid,
    ProsodyTrack, FEATURE_DIM, N_BARK_BANDS, SAMPLE_RATE,
};
use common::oracles::{biased_autocorr, dense_solve, direct_dct, summary_feature_frame};
use fsvc::vocoder::{cepstra_to_lpc, levinson_durbin};

fn grid_for(signal: &AudioSignal) -> (FrameGrid, fsvc::nn::Tensor2) {
    frame_signal(signal, 25.0, 10.0).unwrap()
}

#[test]
fn frame_counts_follow_the_formula() {
    let g = FrameGrid::new(25.0, 10.0, 16000).unwrap();
    assert_eq!((g.window_samples, g.hop_samples, g.n_frames), (400, 160, 98));
    assert_eq!(FrameGrid::new(25.0, 10.0, 400).unwrap().n_frames, 1);
    let short = AudioSignal::new(vec![0.25; 100], SAMPLE_RATE).unwrap();
    let (g, frames) = grid_for(&short);
    assert_eq!(g.n_frames, 1);
    assert!(frames.row(0)[100..].iter().all(|&v| v == 0.0));
}

#[test]
fn mfcc_statics_equal_the_definition_sum() {
    for seed in 0..5 {
        let signal = AudioSignal::new(white_noise(0.3, 8000, seed), SAMPLE_RATE).unwrap();
        let (grid, frames) = grid_for(&signal);
        let log_mel = log_mel_energies(&frames, &grid).unwrap();
        let mfcc = compute_mfcc(&frames, &grid).unwrap();
        for t in 0..grid.n_frames {
            let oracle = direct_dct(log_mel.row(t), N_CEPS);
            for (k, o) in oracle.iter().enumerate() {
                assert!((mfcc.frames[(t, k)] - o).abs() < 1e-9, "seed {seed} frame {t} c{k}");
            }
        }
    }
}

#[test]
fn dct_matrices_are_orthonormal() {
    for n in [N_MEL_FILTERS, N_BARK_BANDS] {
        let m = dct_matrix(n, n);
        let mtm = m.t_matmul(&m);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((mtm[(i, j)] - want).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn constant_log_vector_only_excites_c0() {
    let v = -1.7;
    let c = dct(&dct_matrix(N_CEPS, N_MEL_FILTERS), &[v; N_MEL_FILTERS]);
    assert!((c[0] - v * (N_MEL_FILTERS as f64).sqrt()).abs() < 1e-12);
    assert!(c[1..].iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn levinson_matches_dense_yule_walker() {
    for seed in 0..10 {
        let x = ar_process(&[0.6, -0.3, 0.1], 2000, seed);
        for order in [1, 2, 5, 10, 16] {
            let r = biased_autocorr(&x, order);
            let sol = levinson_durbin(&r).unwrap();
            let toeplitz: Vec<Vec<f64>> = (0..order)
                .map(|i| (0..order).map(|j| r[i.abs_diff(j)]).collect())
                .collect();
            let oracle = dense_solve(toeplitz, r[1..].to_vec());
            for (a, b) in sol.lpc.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-8, "seed {seed} order {order}: {a} vs {b}");
            }
            let err = r[0] - oracle.iter().zip(&r[1..]).map(|(a, r)| a * r).sum::<f64>();
            assert!((sol.pred_error() - err).abs() < 1e-8 * r[0]);
        }
    }
}

#[test]
fn ar2_generator_is_recovered_from_bark_cepstra() {
    for seed in 0..10 {
        let frame = summary_feature_frame(ar_process(&[0.75, -0.5], SAMPLE_RATE as usize, seed));
        let lpc = cepstra_to_lpc(&frame).unwrap();
        assert!((lpc.lpc[0] - 0.75).abs() <= 0.05, "seed {seed}: a1 = {}", lpc.lpc[0]);
        assert!((lpc.lpc[1] + 0.5).abs() <= 0.05, "seed {seed}: a2 = {}", lpc.lpc[1]);
        for (i, a) in lpc.lpc.iter().enumerate().skip(2) {
            assert!(a.abs() < 0.05, "seed {seed}: a{} = {a}", i + 1);
        }
    }
}

#[test]
fn flat_cepstra_give_a_white_filter() {
    let mut frame = vec![0.0; FEATURE_DIM];
    frame[0] = 2.0;
    let lpc = cepstra_to_lpc(&frame).unwrap();
    assert!(lpc.lpc.iter().all(|a| a.abs() < 1e-6));
    let level = (2.0 / (N_BARK_BANDS as f64).sqrt()).exp();
    assert!((lpc.gain * lpc.gain - level).abs() < 1e-6 * level);
}

fn interior_voiced_f0(track: &ProsodyTrack) -> Vec<f64> {
    let n = track.len();
    (3..n - 3).map(|t| {
        assert!(track.voicing[t], "frame {t} unvoiced");
        track.log_f0[t].exp()
    })
    .collect()
}

#[test]
fn pure_tones_are_tracked_within_two_percent() {
    for hz in [80.0, 120.0, 200.0, 350.0] {
        let signal = tone(hz, 0.5, SAMPLE_RATE as usize);
        let (grid, _) = grid_for(&signal);
        let track = estimate_f0(&signal, &grid).unwrap();
        for f in interior_voiced_f0(&track) {
            assert!((f - hz).abs() <= 0.02 * hz, "{hz} Hz tone tracked at {f}");
        }
    }
}

#[test]
fn silence_is_unvoiced_with_fill_value() {
    let signal = AudioSignal::new(vec![0.0; 8000], SAMPLE_RATE).unwrap();
    let (grid, _) = grid_for(&signal);
    let track = estimate_f0(&signal, &grid).unwrap();
    assert_eq!(track.voiced_count(), 0);
    assert!(track.pitch_corr.iter().all(|&c| c == 0.0));
    assert!(track.log_f0.iter().all(|&f| f == 100f64.ln()));
}

#[test]
fn white_noise_is_mostly_unvoiced_and_matches_brute_force() {
    let signal = AudioSignal::new(white_noise(0.3, SAMPLE_RATE as usize, 42), SAMPLE_RATE).unwrap();
    let (grid, _) = grid_for(&signal);
    let track = estimate_f0(&signal, &grid).unwrap();
    assert!(track.voiced_count() * 10 <= grid.n_frames, "{} voiced", track.voiced_count());

    // brute force: best normalized autocorrelation over the lag range never
    // falls below the estimator's reported correlation on voiced frames
    let (lo, hi) = lag_range(SAMPLE_RATE);
    let oracle_voiced = (0..grid.n_frames)
        .filter(|&t| {
            let start = (t * grid.hop_samples) as isize + 200 - 320;
            let seg: Vec<f64> = (0..640)
                .map(|i| {
                    let idx = start + i;
                    if idx >= 0 { signal.samples.get(idx as usize).copied().unwrap_or(0.0) } else { 0.0 }
                })
                .collect();
            (lo..=hi).map(|lag| normalized_autocorr(&seg, lag)).fold(f64::MIN, f64::max) >= 0.3
        })
        .count();
    assert!(track.voiced_count() <= oracle_voiced);
}

#[test]
fn z_scores_of_two_frames_are_plus_minus_one() {
    let track = ProsodyTrack {
        log_f0: vec![100f64.ln(), 200f64.ln()],
        voicing: vec![true, true],
        pitch_corr: vec![0.9, 0.9],
        stats: None,
    };
    let n = normalize_log_f0(&track, None).unwrap();
    assert!((n.log_f0[0] + 1.0).abs() < 1e-12 && (n.log_f0[1] - 1.0).abs() < 1e-12);
    let back = n.denormalized().unwrap();
    for (a, b) in back.log_f0.iter().zip(&track.log_f0) {
        assert!((a - b).abs() < 1e-9);
    }
    let flat = ProsodyTrack { log_f0: vec![5.0; 2], ..track };
    assert!(normalize_log_f0(&flat, None).is_err());
}

#[test]
fn one_kilohertz_tone_concentrates_in_its_band() {
    let signal = tone(1000.0, 0.5, 8000);
    let (grid, frames) = grid_for(&signal);
    let spec = PowerSpectrum::for_window(grid.window_samples);
    let bank = bark_filterbank(spec.n_bins());
    let energies = spec.frames(&frames).matmul(&bank);
    let bin = (1000.0 * spec.n_fft() as f64 / SAMPLE_RATE as f64).round() as usize;
    let band = (0..N_BARK_BANDS).max_by(|&a, &b| bank[(bin, a)].total_cmp(&bank[(bin, b)])).unwrap();
    for t in 0..grid.n_frames {
        let row = energies.row(t);
        let share = row[band] / row.iter().sum::<f64>();
        assert!(share >= 0.8, "frame {t}: {share}");
    }
    let features = compute_bark_features(&frames, &grid, &estimate_f0(&signal, &grid).unwrap()).unwrap();
    assert_eq!(features.frames.shape(), (grid.n_frames, FEATURE_DIM));
}

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::model::{SynthNetwork, SynthesizerParams};
use crate::dsp::{LpcnetFeatureSequence, ProsodyTrack};
use crate::error::{Error, Result};
use crate::nn::{AdamState, Parameters, Tensor2};
use crate::ppg::PpgSequence;

/// One aligned training utterance. The prosody track must be normalized.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub ppg: PpgSequence,
    pub prosody: ProsodyTrack,
    pub target: LpcnetFeatureSequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrainConfig {
    pub epochs: usize,
    /// Utterances per Adam step.
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Steps over which the learning rate halves; constant when `None`.
    pub lr_half_life: Option<usize>,
    pub seed: u64,
    /// Start from this checkpoint instead of the given parameters.
    pub init_from: Option<PathBuf>,
}

impl Default for SynthTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-3,
            lr_half_life: Some(500),
            seed: 0,
            init_from: None,
        }
    }
}

struct Prepared {
    ppg: Tensor2,
    prosody: Tensor2,
    target: Tensor2,
}

/// Mean squared error over all entries and its gradient.
pub fn mse(pred: &Tensor2, target: &Tensor2) -> Result<(f64, Tensor2)> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.len().max(1) as f64;
    let mut grad = Tensor2::zeros(pred.rows(), pred.cols());
    let mut loss = 0.0;
    for ((g, p), t) in grad.as_mut_slice().iter_mut().zip(pred.as_slice()).zip(target.as_slice()) {
        let d = p - t;
        loss += d * d;
        *g = 2.0 * d / n;
    }
    Ok((loss / n, grad))
}

fn prepare(params: &SynthesizerParams, dataset: &[TrainingExample]) -> Result<Vec<Prepared>> {
    if dataset.is_empty() {
        return Err(Error::Empty("synthesizer training set is empty".into()));
    }
    dataset
        .iter()
        .enumerate()
        .map(|(i, ex)| {
            if ex.prosody.stats.is_none() {
                return Err(Error::InvalidArgument(format!(
                    "utterance {i}: prosody is not normalized"
                )));
            }
            if ex.target.len() != ex.ppg.len() {
                return Err(Error::Shape(format!(
                    "utterance {i}: {} PPG frames but {} target frames",
                    ex.ppg.len(),
                    ex.target.len()
                )));
            }
            let (ppg, prosody) = params
                .inputs(&ex.ppg, &ex.prosody)
                .map_err(|e| Error::Shape(format!("utterance {i}: {e}")))?;
            Ok(Prepared {
                ppg,
                prosody,
                target: params.normalize_targets(&ex.target.frames),
            })
        })
        .collect()
}

fn utterance_grad(net: &SynthNetwork, ex: &Prepared) -> Result<(f64, SynthNetwork)> {
    let (out, cache) = net.forward(&ex.ppg, &ex.prosody)?;
    let (loss, dout) = mse(&out, &ex.target)?;
    Ok((loss, net.backward(&cache, &dout)?))
}

/// Mean per-utterance loss over a batch and the matching mean gradient.
/// Utterances are evaluated in parallel and summed in batch order.
fn batch_grad(net: &SynthNetwork, batch: &[&Prepared]) -> Result<(f64, SynthNetwork)> {
    let results: Vec<(f64, SynthNetwork)> = batch
        .par_iter()
        .map(|ex| utterance_grad(net, ex))
        .collect::<Result<_>>()?;
    let mut it = results.into_iter();
    let (mut loss, mut grad) = it.next().expect("batch is non-empty");
    for (l, g) in it {
        loss += l;
        for (acc, t) in grad.tensors_mut().into_iter().zip(g.tensors()) {
            acc.add_assign(t);
        }
    }
    let scale = 1.0 / batch.len() as f64;
    grad.tensors_mut().into_iter().for_each(|t| t.scale(scale));
    Ok((loss * scale, grad))
}

/// Mean per-utterance MSE in normalized target space.
pub fn dataset_loss(params: &SynthesizerParams, dataset: &[TrainingExample]) -> Result<f64> {
    let prepared = prepare(params, dataset)?;
    let losses: Vec<f64> = prepared
        .par_iter()
        .map(|ex| {
            let (out, _) = params.network.forward(&ex.ppg, &ex.prosody)?;
            Ok(mse(&out, &ex.target)?.0)
        })
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Minimizes feature MSE with Adam. Each epoch visits every utterance once in
/// a seed-determined order; `loss_history` gains the mean batch loss of the
/// epoch.
pub fn train_synthesizer(
    params: SynthesizerParams,
    dataset: &[TrainingExample],
    config: &SynthTrainConfig,
) -> Result<SynthesizerParams> {
    let mut params = match &config.init_from {
        Some(path) => SynthesizerParams::load(path)?,
        None => params,
    };
    let prepared = prepare(&params, dataset)?;
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be positive".into()));
    }
    let mut adam = AdamState::new(config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Prepared> = chunk.iter().map(|&i| &prepared[i]).collect();
            let (loss, grad) = batch_grad(&params.network, &batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
            }
            if let Some(h) = config.lr_half_life {
                adam.lr = config.learning_rate * 0.5f64.powf(adam.step as f64 / h as f64);
            }
            adam.update(&mut params.network.tensors_mut(), &grad.tensors())?;
            params.steps += 1;
            total += loss;
            batches += 1;
        }
        params.epochs += 1;
        let mean = total / batches as f64;
        log::debug!("epoch {epoch}: loss {mean:.6}");
        params.loss_history.push(mean);
    }
    params.network.round_to_f32();
    Ok(params)
}

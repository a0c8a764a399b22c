//! Phonetic posteriorgrams: a frame classifier from 39-dim MFCCs to
//! log-posteriors over phonetic classes, and the PPG file bypass for
//! posteriors computed elsewhere.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dsp::{FrameGrid, MfccSequence, MFCC_DIM};
use crate::error::{Error, Result};
use crate::io::format::{FeatureFile, ModelFile};
use crate::nn::params::join;
use crate::nn::{softmax_cross_entropy, softmax_rows, AdamState, Linear, Parameters, Tensor2};

pub const DEFAULT_CLASSES: usize = 64;
pub const DEFAULT_HIDDEN: usize = 128;
pub const PROB_FLOOR: f64 = 1e-8;

/// `ln(PROB_FLOOR)`; entries sit at or just below this after renormalizing.
pub fn log_floor() -> f64 {
    PROB_FLOOR.ln()
}

/// Per-frame log posteriors, `T × K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PpgSequence {
    pub log_post: Tensor2,
    pub grid: FrameGrid,
}

impl PpgSequence {
    pub fn new(log_post: Tensor2, grid: FrameGrid) -> Result<Self> {
        if log_post.rows() != grid.n_frames {
            return Err(Error::Shape(format!(
                "{} PPG rows on a grid of {} frames",
                log_post.rows(),
                grid.n_frames
            )));
        }
        if log_post.cols() == 0 {
            return Err(Error::Shape("PPG needs at least one class".into()));
        }
        if !log_post.is_finite() {
            return Err(Error::NonFinite("PPG log posteriors".into()));
        }
        Ok(Self { log_post, grid })
    }

    pub fn n_classes(&self) -> usize {
        self.log_post.cols()
    }

    pub fn len(&self) -> usize {
        self.log_post.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.log_post.rows() == 0
    }

    pub fn posteriors(&self) -> Tensor2 {
        self.log_post.map(f64::exp)
    }

    /// Most probable class per frame.
    pub fn argmax(&self) -> Vec<usize> {
        self.log_post
            .iter_rows()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                    .0
            })
            .collect()
    }

    /// Fraction of frames whose argmax equals the label.
    pub fn accuracy(&self, labels: &[usize]) -> Result<f64> {
        if labels.len() != self.len() || labels.is_empty() {
            return Err(Error::Shape(format!("{} labels for {} frames", labels.len(), self.len())));
        }
        let hits = self.argmax().iter().zip(labels).filter(|(a, b)| a == b).count();
        Ok(hits as f64 / labels.len() as f64)
    }

    /// Largest `|Σ exp(row) − 1|` over all rows.
    pub fn max_row_deviation(&self) -> f64 {
        self.log_post
            .iter_rows()
            .map(|r| (r.iter().map(|v| v.exp()).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Clamps probabilities at the floor, renormalizes and takes logs, in place.
pub(crate) fn floor_and_log(probs: &mut Tensor2) {
    for r in 0..probs.rows() {
        let row = probs.row_mut(r);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = v.max(PROB_FLOOR);
            sum += *v;
        }
        for v in row.iter_mut() {
            *v = (*v / sum).ln();
        }
    }
}

/// `39 → H → H → K` with tanh hidden units.
#[derive(Debug, Clone, PartialEq)]
pub struct PpgNetwork {
    pub hidden1: Linear,
    pub hidden2: Linear,
    pub output: Linear,
}

impl Parameters for PpgNetwork {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor2)) {
        self.hidden1.visit(&join(prefix, "hidden1"), f);
        self.hidden2.visit(&join(prefix, "hidden2"), f);
        self.output.visit(&join(prefix, "output"), f);
    }

    fn visit_mut<'a>(&'a mut self, f: &mut dyn FnMut(&'a mut Tensor2)) {
        self.hidden1.visit_mut(f);
        self.hidden2.visit_mut(f);
        self.output.visit_mut(f);
    }
}

struct Activations {
    input: Tensor2,
    h1: Tensor2,
    h2: Tensor2,
    logits: Tensor2,
}

impl PpgNetwork {
    pub fn new(n_classes: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            hidden1: Linear::new(MFCC_DIM, hidden, &mut rng),
            hidden2: Linear::new(hidden, hidden, &mut rng),
            output: Linear::new(hidden, n_classes, &mut rng),
        }
    }

    pub fn zeros(n_classes: usize, hidden: usize) -> Self {
        Self {
            hidden1: Linear::zeros(MFCC_DIM, hidden),
            hidden2: Linear::zeros(hidden, hidden),
            output: Linear::zeros(hidden, n_classes),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.output.dout()
    }

    pub fn hidden(&self) -> usize {
        self.hidden1.dout()
    }

    fn forward(&self, input: &Tensor2) -> Result<Activations> {
        let h1 = self.hidden1.forward(input)?.map(f64::tanh);
        let h2 = self.hidden2.forward(&h1)?.map(f64::tanh);
        let logits = self.output.forward(&h2)?;
        Ok(Activations {
            input: input.clone(),
            h1,
            h2,
            logits,
        })
    }

    /// Mean cross-entropy on already-normalized inputs and its gradient.
    pub fn loss_and_grad(&self, input: &Tensor2, labels: &[usize]) -> Result<(f64, PpgNetwork)> {
        let acts = self.forward(input)?;
        let (loss, dlogits) = softmax_cross_entropy(&acts.logits, labels)?;
        let mut grad = PpgNetwork::zeros(self.n_classes(), self.hidden());
        let mut dh2 = self.output.backward(&acts.h2, &dlogits, &mut grad.output)?;
        tanh_backward(&mut dh2, &acts.h2);
        let mut dh1 = self.hidden2.backward(&acts.h1, &dh2, &mut grad.hidden2)?;
        tanh_backward(&mut dh1, &acts.h1);
        self.hidden1.backward(&acts.input, &dh1, &mut grad.hidden1)?;
        Ok((loss, grad))
    }

    pub fn loss(&self, input: &Tensor2, labels: &[usize]) -> Result<f64> {
        let acts = self.forward(input)?;
        Ok(softmax_cross_entropy(&acts.logits, labels)?.0)
    }
}

fn tanh_backward(grad: &mut Tensor2, out: &Tensor2) {
    for (g, y) in grad.as_mut_slice().iter_mut().zip(out.as_slice()) {
        *g *= 1.0 - y * y;
    }
}

/// Training hyperparameters for the extractor.
#[derive(Debug, Clone, PartialEq)]
pub struct PpgTrainConfig {
    pub n_classes: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for PpgTrainConfig {
    fn default() -> Self {
        Self {
            n_classes: DEFAULT_CLASSES,
            hidden: DEFAULT_HIDDEN,
            epochs: 20,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

/// A trained (or freshly initialized) extractor.
#[derive(Debug, Clone, PartialEq)]
pub struct PpgExtractorParams {
    pub network: PpgNetwork,
    /// Per-dimension input standardization, `1 × 39` each.
    pub input_mean: Tensor2,
    pub input_std: Tensor2,
    pub seed: u64,
    pub epochs: usize,
    /// Full-dataset loss before training followed by one entry per epoch.
    pub loss_history: Vec<f64>,
}

impl PpgExtractorParams {
    /// Untrained extractor with identity input standardization.
    pub fn new(n_classes: usize, hidden: usize, seed: u64) -> Result<Self> {
        if n_classes == 0 || hidden == 0 {
            return Err(Error::InvalidArgument(
                "extractor needs at least one class and one hidden unit".into(),
            ));
        }
        Ok(Self {
            network: PpgNetwork::new(n_classes, hidden, seed),
            input_mean: Tensor2::zeros(1, MFCC_DIM),
            input_std: Tensor2::filled(1, MFCC_DIM, 1.0),
            seed,
            epochs: 0,
            loss_history: Vec::new(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.network.n_classes()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.loss_history.last().copied()
    }

    pub fn standardize(&self, frames: &Tensor2) -> Result<Tensor2> {
        if frames.cols() != MFCC_DIM {
            return Err(Error::Shape(format!(
                "extractor expects {MFCC_DIM}-dim frames, got {}",
                frames.cols()
            )));
        }
        let mut out = frames.clone();
        let mean = self.input_mean.as_slice();
        let std = self.input_std.as_slice();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = (*v - mean[c]) / std[c];
            }
        }
        Ok(out)
    }

    pub fn to_model_file(&self) -> ModelFile {
        let mut m = ModelFile::default();
        m.set("kind", "ppg-extractor");
        m.set("n_classes", self.n_classes());
        m.set("hidden", self.network.hidden());
        m.set("seed", self.seed);
        m.set("epochs", self.epochs);
        if let Some(l) = self.final_loss() {
            m.set("final_loss", l);
        }
        m.push("input_mean", self.input_mean.clone());
        m.push("input_std", self.input_std.clone());
        for (name, t) in self.network.named_tensors() {
            m.push(name, t.clone());
        }
        m
    }

    pub fn from_model_file(m: &ModelFile) -> Result<Self> {
        if m.get("kind")? != "ppg-extractor" {
            return Err(Error::Format {
                path: "model".into(),
                message: format!("expected a ppg-extractor model, found {:?}", m.get("kind")?),
            });
        }
        let n_classes: usize = m.parse("n_classes")?;
        let hidden: usize = m.parse("hidden")?;
        let mut network = PpgNetwork::zeros(n_classes, hidden);
        load_tensors(&mut network, m)?;
        let input_mean = m.tensor("input_mean")?.clone();
        let input_std = m.tensor("input_std")?.clone();
        if input_mean.shape() != (1, MFCC_DIM) || input_std.shape() != (1, MFCC_DIM) {
            return Err(Error::Format {
                path: "model".into(),
                message: "input standardization must be 1 x 39".into(),
            });
        }
        let final_loss = m.metadata.get("final_loss").and_then(|v| v.parse().ok());
        Ok(Self {
            network,
            input_mean,
            input_std,
            seed: m.parse("seed")?,
            epochs: m.parse("epochs")?,
            loss_history: final_loss.into_iter().collect(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_model_file().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_model_file(&ModelFile::load(path)?)
    }
}

/// Copies tensors named after `target`'s parameters out of a model file,
/// checking every shape.
pub(crate) fn load_tensors<P: Parameters>(target: &mut P, m: &ModelFile) -> Result<()> {
    let names: Vec<(String, (usize, usize))> = target
        .named_tensors()
        .into_iter()
        .map(|(n, t)| (n, t.shape()))
        .collect();
    let mut loaded = Vec::with_capacity(names.len());
    for (name, shape) in &names {
        let t = m.tensor(name)?;
        if t.shape() != *shape {
            return Err(Error::Format {
                path: "model".into(),
                message: format!("tensor {name:?} is {:?}, expected {shape:?}", t.shape()),
            });
        }
        loaded.push(t.clone());
    }
    let mut it = loaded.into_iter();
    target.visit_mut(&mut |t| *t = it.next().unwrap());
    Ok(())
}

/// Trains the classifier on labelled MFCC sequences with mini-batch Adam on
/// mean cross-entropy. Batch order is shuffled from `config.seed`.
pub fn train_ppg_extractor(
    utterances: &[MfccSequence],
    labels: &[Vec<usize>],
    config: &PpgTrainConfig,
) -> Result<PpgExtractorParams> {
    if utterances.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} utterances but {} label sequences",
            utterances.len(),
            labels.len()
        )));
    }
    let k = config.n_classes;
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (i, (u, l)) in utterances.iter().zip(labels).enumerate() {
        if u.frames.cols() != MFCC_DIM {
            return Err(Error::Shape(format!(
                "utterance {i} has {}-dim frames",
                u.frames.cols()
            )));
        }
        if u.frames.rows() != l.len() {
            return Err(Error::Shape(format!(
                "utterance {i}: {} frames but {} labels",
                u.frames.rows(),
                l.len()
            )));
        }
        for (row, &label) in u.frames.iter_rows().zip(l) {
            if label >= k {
                return Err(Error::ClassOutOfRange {
                    id: label,
                    classes: k,
                });
            }
            rows.push(row.to_vec());
            targets.push(label);
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty("no labelled frames to train on".into()));
    }
    let mut seen = vec![false; k];
    for &t in &targets {
        seen[t] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidArgument(format!(
            "class {missing} has no training example"
        )));
    }
    let data = Tensor2::from_rows(&rows)?;

    let mut params = PpgExtractorParams::new(k, config.hidden, config.seed)?;
    let (mean, std) = column_stats(&data);
    params.input_mean = mean;
    params.input_std = std;
    let inputs = params.standardize(&data)?;

    let mut adam = AdamState::new(config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..inputs.rows()).collect();
    let batch = config.batch_size.max(1);
    params.loss_history.push(params.network.loss(&inputs, &targets)?);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let xb = gather_rows(&inputs, chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| targets[i]).collect();
            let (_, grad) = params.network.loss_and_grad(&xb, &yb)?;
            adam.update(&mut params.network.tensors_mut(), &grad.tensors())?;
        }
        params.epochs += 1;
        params.loss_history.push(params.network.loss(&inputs, &targets)?);
    }
    params.network.round_to_f32();
    Ok(params)
}

fn gather_rows(x: &Tensor2, idx: &[usize]) -> Tensor2 {
    let mut out = Tensor2::zeros(idx.len(), x.cols());
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).copy_from_slice(x.row(i));
    }
    out
}

fn column_stats(x: &Tensor2) -> (Tensor2, Tensor2) {
    let n = x.rows() as f64;
    let mut mean = x.sum_rows();
    mean.scale(1.0 / n);
    let mut var = Tensor2::zeros(1, x.cols());
    for row in x.iter_rows() {
        for (c, v) in row.iter().enumerate() {
            var.as_mut_slice()[c] += (v - mean.as_slice()[c]).powi(2) / n;
        }
    }
    // constant columns pass through unscaled
    let std = var.map(|v| if v.sqrt() > 1e-8 { v.sqrt() } else { 1.0 });
    // model files hold f32, so keep the stats exactly representable
    let to_f32 = |v: f64| v as f32 as f64;
    (mean.map(to_f32), std.map(to_f32))
}

/// Log posteriors for every MFCC frame.
pub fn extract_ppg(params: &PpgExtractorParams, mfcc: &MfccSequence) -> Result<PpgSequence> {
    let inputs = params.standardize(&mfcc.frames)?;
    let acts = params.network.forward(&inputs)?;
    let mut probs = softmax_rows(&acts.logits);
    floor_and_log(&mut probs);
    PpgSequence::new(probs, mfcc.grid)
}

pub fn save_ppg_file(ppg: &PpgSequence, path: &Path) -> Result<()> {
    FeatureFile::new(ppg.log_post.clone(), &ppg.grid).save(path)
}

pub fn load_ppg_file(path: &Path) -> Result<PpgSequence> {
    let f = FeatureFile::load(path)?;
    let grid = f.grid()?;
    PpgSequence::new(f.matrix, grid)
}

/// Like [`load_ppg_file`], also requiring `n_classes` columns.
pub fn load_ppg_file_with_classes(path: &Path, n_classes: usize) -> Result<PpgSequence> {
    let ppg = load_ppg_file(path)?;
    if ppg.n_classes() != n_classes {
        return Err(Error::Format {
            path: path.display().to_string(),
            message: format!(
                "header declares {} classes, expected {n_classes}",
                ppg.n_classes()
            ),
        });
    }
    Ok(ppg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> FrameGrid {
        FrameGrid::with_frames(25.0, 10.0, n).unwrap()
    }

    #[test]
    fn zero_network_gives_uniform_posteriors() {
        let mut params = PpgExtractorParams::new(8, 16, 0).unwrap();
        params.network = PpgNetwork::zeros(8, 16);
        let mfcc = MfccSequence {
            frames: Tensor2::filled(5, MFCC_DIM, 0.3),
            grid: grid(5),
        };
        let ppg = extract_ppg(&params, &mfcc).unwrap();
        for v in ppg.log_post.as_slice() {
            assert!((v - (1.0f64 / 8.0).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn output_rows_match_input_rows() {
        let params = PpgExtractorParams::new(DEFAULT_CLASSES, DEFAULT_HIDDEN, 1).unwrap();
        let mfcc = MfccSequence {
            frames: Tensor2::filled(98, MFCC_DIM, -1.0),
            grid: grid(98),
        };
        assert_eq!(extract_ppg(&params, &mfcc).unwrap().len(), 98);
    }

    #[test]
    fn wrong_input_width_is_rejected() {
        let params = PpgExtractorParams::new(4, 8, 1).unwrap();
        let mfcc = MfccSequence {
            frames: Tensor2::zeros(3, 13),
            grid: grid(3),
        };
        assert!(matches!(extract_ppg(&params, &mfcc), Err(Error::Shape(_))));
    }

    #[test]
    fn floor_bounds_log_posteriors() {
        let mut p = Tensor2::from_vec(1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        floor_and_log(&mut p);
        let row = p.row(0);
        assert!(row.iter().all(|&v| v <= 0.0 && v >= log_floor() - 1e-6));
        assert!((row.iter().map(|v| v.exp()).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn label_out_of_range_and_empty_are_rejected() {
        let cfg = PpgTrainConfig {
            n_classes: 2,
            hidden: 4,
            ..Default::default()
        };
        let u = MfccSequence {
            frames: Tensor2::zeros(2, MFCC_DIM),
            grid: grid(2),
        };
        assert!(matches!(
            train_ppg_extractor(&[u], &[vec![0, 2]], &cfg),
            Err(Error::ClassOutOfRange { id: 2, classes: 2 })
        ));
        assert!(matches!(train_ppg_extractor(&[], &[], &cfg), Err(Error::Empty(_))));
    }

    #[test]
    fn single_class_posterior_is_certain() {
        let cfg = PpgTrainConfig {
            n_classes: 1,
            hidden: 4,
            epochs: 2,
            ..Default::default()
        };
        let u = MfccSequence {
            frames: Tensor2::filled(6, MFCC_DIM, 0.5),
            grid: grid(6),
        };
        let params = train_ppg_extractor(std::slice::from_ref(&u), &[vec![0; 6]], &cfg).unwrap();
        assert_eq!(params.final_loss(), Some(0.0));
        let ppg = extract_ppg(&params, &u).unwrap();
        assert!(ppg.log_post.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn model_file_round_trip() {
        let params = PpgExtractorParams::new(5, 7, 3).unwrap();
        let back = PpgExtractorParams::from_model_file(&params.to_model_file()).unwrap();
        assert_eq!(back.network, params.network);
        assert_eq!(back.input_std, params.input_std);
    }
}

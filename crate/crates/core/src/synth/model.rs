use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::SynthesizerConfig;
use crate::dsp::bark::{CORR_COLUMN, FEATURE_DIM};
use crate::dsp::{LpcnetFeatureSequence, ProsodyTrack};
use crate::error::{Error, Result};
use crate::io::format::ModelFile;
use crate::nn::params::join;
use crate::nn::{
    position_encoding, relu, relu_backward, AttentionCache, Conv1d, LayerNorm, LayerNormCache,
    Linear, MultiHeadAttention, Parameters, Tensor2,
};
use crate::ppg::{load_tensors, PpgSequence};

/// Self-attention sublayer followed by a two-layer convolutional sublayer,
/// each wrapped in a residual connection and post layer norm.
#[derive(Debug, Clone, PartialEq)]
pub struct FftBlock {
    pub attention: MultiHeadAttention,
    pub attention_norm: LayerNorm,
    pub conv1: Conv1d,
    pub conv2: Conv1d,
    pub conv_norm: LayerNorm,
}

pub struct BlockCache {
    attention: AttentionCache,
    attention_norm: LayerNormCache,
    mid: Tensor2,
    conv1_out: Tensor2,
    conv1_act: Tensor2,
    conv_norm: LayerNormCache,
}

impl FftBlock {
    fn new(config: &SynthesizerConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let d = config.model_dim;
        Ok(Self {
            attention: MultiHeadAttention::new(d, config.n_heads, rng)?,
            attention_norm: LayerNorm::new(d),
            conv1: Conv1d::new(d, config.conv_hidden, config.conv_kernel, rng)?,
            conv2: Conv1d::new(config.conv_hidden, d, config.conv_kernel, rng)?,
            conv_norm: LayerNorm::new(d),
        })
    }

    fn zeros(config: &SynthesizerConfig) -> Self {
        let d = config.model_dim;
        Self {
            attention: MultiHeadAttention::zeros(d, config.n_heads),
            attention_norm: LayerNorm::zeros(d),
            conv1: Conv1d::zeros(d, config.conv_hidden, config.conv_kernel),
            conv2: Conv1d::zeros(config.conv_hidden, d, config.conv_kernel),
            conv_norm: LayerNorm::zeros(d),
        }
    }

    pub fn forward(&self, x: &Tensor2) -> Result<(Tensor2, BlockCache)> {
        let (a, attention) = self.attention.forward(x)?;
        let (mid, attention_norm) = self.attention_norm.forward(&x.add(&a))?;
        let conv1_out = self.conv1.forward(&mid)?;
        let conv1_act = relu(&conv1_out);
        let c2 = self.conv2.forward(&conv1_act)?;
        let (y, conv_norm) = self.conv_norm.forward(&mid.add(&c2))?;
        Ok((
            y,
            BlockCache {
                attention,
                attention_norm,
                mid,
                conv1_out,
                conv1_act,
                conv_norm,
            },
        ))
    }

    pub fn backward(&self, cache: &BlockCache, dy: &Tensor2, grad: &mut FftBlock) -> Result<Tensor2> {
        let ds2 = self.conv_norm.backward(&cache.conv_norm, dy, &mut grad.conv_norm);
        let dact = self.conv2.backward(&cache.conv1_act, &ds2, &mut grad.conv2)?;
        let dconv1 = relu_backward(&cache.conv1_out, &dact);
        let mut dmid = self.conv1.backward(&cache.mid, &dconv1, &mut grad.conv1)?;
        dmid.add_assign(&ds2);
        let ds1 = self
            .attention_norm
            .backward(&cache.attention_norm, &dmid, &mut grad.attention_norm);
        let mut dx = self
            .attention
            .backward(&cache.attention, &ds1, &mut grad.attention)?;
        dx.add_assign(&ds1);
        Ok(dx)
    }
}

impl Parameters for FftBlock {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor2)) {
        self.attention.visit(&join(prefix, "attention"), f);
        self.attention_norm.visit(&join(prefix, "attention_norm"), f);
        self.conv1.visit(&join(prefix, "conv1"), f);
        self.conv2.visit(&join(prefix, "conv2"), f);
        self.conv_norm.visit(&join(prefix, "conv_norm"), f);
    }

    fn visit_mut<'a>(&'a mut self, f: &mut dyn FnMut(&'a mut Tensor2)) {
        self.attention.visit_mut(f);
        self.attention_norm.visit_mut(f);
        self.conv1.visit_mut(f);
        self.conv2.visit_mut(f);
        self.conv_norm.visit_mut(f);
    }
}

/// The trainable part of the synthesizer.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthNetwork {
    pub ppg_linear: Linear,
    pub ppg_norm: LayerNorm,
    pub encoder: Vec<FftBlock>,
    /// Projects `[encoder output, prosody]` back to the model width.
    pub bridge: Linear,
    pub decoder: Vec<FftBlock>,
    pub feat_linear: Linear,
}

pub struct NetworkCache {
    ppg: Tensor2,
    embed: Tensor2,
    embed_norm: LayerNormCache,
    encoder: Vec<BlockCache>,
    bridge_in: Tensor2,
    decoder: Vec<BlockCache>,
    decoder_out: Tensor2,
}

impl SynthNetwork {
    pub fn new(config: &SynthesizerConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.model_dim;
        let ppg_linear = Linear::new(config.ppg_classes, d, &mut rng);
        let encoder = (0..config.n_blocks)
            .map(|_| FftBlock::new(config, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let bridge = Linear::new(d + config.prosody_dim, d, &mut rng);
        let decoder = (0..config.n_blocks)
            .map(|_| FftBlock::new(config, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let feat_linear = Linear::new(d, config.out_dim, &mut rng);
        Ok(Self {
            ppg_linear,
            ppg_norm: LayerNorm::new(d),
            encoder,
            bridge,
            decoder,
            feat_linear,
        })
    }

    pub fn zeros(config: &SynthesizerConfig) -> Self {
        let d = config.model_dim;
        Self {
            ppg_linear: Linear::zeros(config.ppg_classes, d),
            ppg_norm: LayerNorm::zeros(d),
            encoder: (0..config.n_blocks).map(|_| FftBlock::zeros(config)).collect(),
            bridge: Linear::zeros(d + config.prosody_dim, d),
            decoder: (0..config.n_blocks).map(|_| FftBlock::zeros(config)).collect(),
            feat_linear: Linear::zeros(d, config.out_dim),
        }
    }

    pub fn model_dim(&self) -> usize {
        self.ppg_linear.dout()
    }

    /// PPG embedding, encoder stack and the prosody bridge: the decoder input
    /// before position encoding.
    fn encode(&self, ppg: &Tensor2, prosody: &Tensor2) -> Result<(Tensor2, Tensor2, LayerNormCache, Vec<BlockCache>, Tensor2)> {
        let t = ppg.rows();
        let d = self.model_dim();
        let pe = position_encoding(t, d)?;
        let embed = self.ppg_linear.forward(ppg)?;
        let (normed, embed_norm) = self.ppg_norm.forward(&embed)?;
        let mut h = relu(&normed).add(&pe);
        let mut caches = Vec::with_capacity(self.encoder.len());
        for block in &self.encoder {
            let (y, c) = block.forward(&h)?;
            caches.push(c);
            h = y;
        }
        let bridge_in = h.hcat(prosody)?;
        let bridged = self.bridge.forward(&bridge_in)?;
        Ok((bridged, embed, embed_norm, caches, bridge_in))
    }

    fn decode(&self, bridged: &Tensor2) -> Result<(Tensor2, Vec<BlockCache>, Tensor2)> {
        let pe = position_encoding(bridged.rows(), self.model_dim())?;
        let mut h = bridged.add(&pe);
        let mut caches = Vec::with_capacity(self.decoder.len());
        for block in &self.decoder {
            let (y, c) = block.forward(&h)?;
            caches.push(c);
            h = y;
        }
        let out = self.feat_linear.forward(&h)?;
        Ok((out, caches, h))
    }

    /// Raw network output (`T × out_dim`) in the normalized target space.
    pub fn forward(&self, ppg: &Tensor2, prosody: &Tensor2) -> Result<(Tensor2, NetworkCache)> {
        if ppg.rows() != prosody.rows() {
            return Err(Error::Shape(format!(
                "{} PPG frames but {} prosody frames",
                ppg.rows(),
                prosody.rows()
            )));
        }
        let (bridged, embed, embed_norm, encoder, bridge_in) = self.encode(ppg, prosody)?;
        let (out, decoder, decoder_out) = self.decode(&bridged)?;
        Ok((
            out,
            NetworkCache {
                ppg: ppg.clone(),
                embed,
                embed_norm,
                encoder,
                bridge_in,
                decoder,
                decoder_out,
            },
        ))
    }

    /// Gradients of a scalar loss with respect to every parameter, given
    /// `dL/d(output)`.
    pub fn backward(&self, cache: &NetworkCache, dout: &Tensor2) -> Result<SynthNetwork> {
        let d = self.model_dim();
        let mut grad = self.zeros_like();
        let mut dh = self
            .feat_linear
            .backward(&cache.decoder_out, dout, &mut grad.feat_linear)?;
        for (i, block) in self.decoder.iter().enumerate().rev() {
            dh = block.backward(&cache.decoder[i], &dh, &mut grad.decoder[i])?;
        }
        let dcat = self.bridge.backward(&cache.bridge_in, &dh, &mut grad.bridge)?;
        let mut dh = dcat.slice_cols(0, d);
        for (i, block) in self.encoder.iter().enumerate().rev() {
            dh = block.backward(&cache.encoder[i], &dh, &mut grad.encoder[i])?;
        }
        let (normed, _) = self.ppg_norm.forward(&cache.embed)?;
        let dnormed = relu_backward(&normed, &dh);
        let dembed = self
            .ppg_norm
            .backward(&cache.embed_norm, &dnormed, &mut grad.ppg_norm);
        self.ppg_linear
            .backward(&cache.ppg, &dembed, &mut grad.ppg_linear)?;
        Ok(grad)
    }

    fn zeros_like(&self) -> SynthNetwork {
        let mut g = self.clone();
        g.zero_();
        g
    }

    /// Emulates autoregressive generation: the encoder runs once, then frame
    /// `t` is produced by decoding the prefix `0..=t` from scratch.
    pub fn forward_prefix_decoding(&self, ppg: &Tensor2, prosody: &Tensor2) -> Result<Tensor2> {
        let (bridged, ..) = self.encode(ppg, prosody)?;
        let t_len = bridged.rows();
        let mut out = Tensor2::zeros(t_len, self.feat_linear.dout());
        for t in 0..t_len {
            let (y, _, _) = self.decode(&bridged.slice_rows(0, t + 1))?;
            out.row_mut(t).copy_from_slice(y.row(t));
        }
        Ok(out)
    }
}

impl Parameters for SynthNetwork {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor2)) {
        self.ppg_linear.visit(&join(prefix, "ppg_linear"), f);
        self.ppg_norm.visit(&join(prefix, "ppg_norm"), f);
        for (i, b) in self.encoder.iter().enumerate() {
            b.visit(&join(prefix, &format!("encoder.{i}")), f);
        }
        self.bridge.visit(&join(prefix, "bridge"), f);
        for (i, b) in self.decoder.iter().enumerate() {
            b.visit(&join(prefix, &format!("decoder.{i}")), f);
        }
        self.feat_linear.visit(&join(prefix, "feat_linear"), f);
    }

    fn visit_mut<'a>(&'a mut self, f: &mut dyn FnMut(&'a mut Tensor2)) {
        self.ppg_linear.visit_mut(f);
        self.ppg_norm.visit_mut(f);
        for b in &mut self.encoder {
            b.visit_mut(f);
        }
        self.bridge.visit_mut(f);
        for b in &mut self.decoder {
            b.visit_mut(f);
        }
        self.feat_linear.visit_mut(f);
    }
}

/// Network weights, output scaling and training bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizerParams {
    pub config: SynthesizerConfig,
    pub network: SynthNetwork,
    /// Per-column target statistics; the network predicts
    /// `(feature − mean) / std`.
    pub output_mean: Tensor2,
    pub output_std: Tensor2,
    pub epochs: usize,
    pub steps: usize,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
}

pub fn build_synthesizer(config: &SynthesizerConfig) -> Result<SynthesizerParams> {
    Ok(SynthesizerParams {
        network: SynthNetwork::new(config)?,
        output_mean: Tensor2::zeros(1, config.out_dim),
        output_std: Tensor2::filled(1, config.out_dim, 1.0),
        config: config.clone(),
        epochs: 0,
        steps: 0,
        loss_history: Vec::new(),
    })
}

/// `[normalized log-F0, voicing]` per frame.
pub fn prosody_matrix(prosody: &ProsodyTrack) -> Result<Tensor2> {
    prosody.check_consistent()?;
    let mut m = Tensor2::zeros(prosody.len(), 2);
    for t in 0..prosody.len() {
        m[(t, 0)] = prosody.log_f0[t];
        m[(t, 1)] = if prosody.voicing[t] { 1.0 } else { 0.0 };
    }
    Ok(m)
}

impl SynthesizerParams {
    pub fn final_loss(&self) -> Option<f64> {
        self.loss_history.last().copied()
    }

    pub(crate) fn inputs(&self, ppg: &PpgSequence, prosody: &ProsodyTrack) -> Result<(Tensor2, Tensor2)> {
        if ppg.n_classes() != self.config.ppg_classes {
            return Err(Error::Shape(format!(
                "synthesizer expects {} PPG classes, got {}",
                self.config.ppg_classes,
                ppg.n_classes()
            )));
        }
        if ppg.len() != prosody.len() {
            return Err(Error::Shape(format!(
                "{} PPG frames but {} prosody frames",
                ppg.len(),
                prosody.len()
            )));
        }
        if ppg.is_empty() {
            return Err(Error::Empty("synthesizer input has no frames".into()));
        }
        Ok((ppg.log_post.clone(), prosody_matrix(prosody)?))
    }

    pub fn normalize_targets(&self, features: &Tensor2) -> Tensor2 {
        let mut out = features.clone();
        let (m, s) = (self.output_mean.as_slice(), self.output_std.as_slice());
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = (*v - m[c]) / s[c];
            }
        }
        out
    }

    pub fn denormalize(&self, raw: &Tensor2) -> Tensor2 {
        let mut out = raw.clone();
        let (m, s) = (self.output_mean.as_slice(), self.output_std.as_slice());
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = *v * s[c] + m[c];
            }
        }
        out
    }

    /// Sets the output scaling from the column statistics of `targets`.
    pub fn fit_output_normalization<'a>(&mut self, targets: impl IntoIterator<Item = &'a Tensor2>) {
        let cols = self.config.out_dim;
        let mut sum = vec![0.0; cols];
        let mut sq = vec![0.0; cols];
        let mut n = 0usize;
        for t in targets {
            for row in t.iter_rows() {
                for c in 0..cols {
                    sum[c] += row[c];
                    sq[c] += row[c] * row[c];
                }
                n += 1;
            }
        }
        if n == 0 {
            return;
        }
        for c in 0..cols {
            let mean = sum[c] / n as f64;
            let var = (sq[c] / n as f64 - mean * mean).max(0.0);
            let std = if var.sqrt() > 1e-6 { var.sqrt() } else { 1.0 };
            // stored in single precision, so round now to keep saves exact
            self.output_mean.as_mut_slice()[c] = (mean as f32) as f64;
            self.output_std.as_mut_slice()[c] = (std as f32) as f64;
        }
    }

    pub fn to_model_file(&self) -> ModelFile {
        let mut m = ModelFile::default();
        m.set("kind", "synthesizer");
        self.config.write_metadata(&mut m);
        m.set("epochs", self.epochs);
        m.set("steps", self.steps);
        if let Some(l) = self.final_loss() {
            m.set("final_loss", l);
        }
        m.push("output_mean", self.output_mean.clone());
        m.push("output_std", self.output_std.clone());
        for (name, t) in self.network.named_tensors() {
            m.push(name, t.clone());
        }
        m
    }

    pub fn from_model_file(m: &ModelFile) -> Result<Self> {
        if m.get("kind")? != "synthesizer" {
            return Err(Error::Format {
                path: "model".into(),
                message: format!("expected a synthesizer model, found {:?}", m.get("kind")?),
            });
        }
        let config = SynthesizerConfig::read_metadata(m)?;
        config.validate()?;
        let mut network = SynthNetwork::zeros(&config);
        load_tensors(&mut network, m)?;
        let output_mean = m.tensor("output_mean")?.clone();
        let output_std = m.tensor("output_std")?.clone();
        if output_mean.shape() != (1, config.out_dim) || output_std.shape() != (1, config.out_dim) {
            return Err(Error::Format {
                path: "model".into(),
                message: "output scaling has the wrong width".into(),
            });
        }
        let final_loss = m.metadata.get("final_loss").and_then(|v| v.parse().ok());
        Ok(Self {
            config,
            network,
            output_mean,
            output_std,
            epochs: m.parse("epochs")?,
            steps: m.parse("steps")?,
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

/// Parallel inference: all frames in one pass, output length equal to input
/// length. The prosody track must already be normalized.
pub fn synth_forward(
    params: &SynthesizerParams,
    ppg: &PpgSequence,
    prosody: &ProsodyTrack,
) -> Result<LpcnetFeatureSequence> {
    if prosody.stats.is_none() {
        return Err(Error::InvalidArgument(
            "synthesizer input prosody must be normalized".into(),
        ));
    }
    let (x, p) = params.inputs(ppg, prosody)?;
    let (raw, _) = params.network.forward(&x, &p)?;
    to_features(params, &raw, ppg)
}

pub(crate) fn to_features(
    params: &SynthesizerParams,
    raw: &Tensor2,
    ppg: &PpgSequence,
) -> Result<LpcnetFeatureSequence> {
    let mut feats = params.denormalize(raw);
    if feats.cols() == FEATURE_DIM {
        for r in 0..feats.rows() {
            let v = &mut feats.row_mut(r)[CORR_COLUMN];
            *v = v.clamp(0.0, 1.0);
        }
    }
    LpcnetFeatureSequence::new(feats, ppg.grid.resized(raw.rows()))
}

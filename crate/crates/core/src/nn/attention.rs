//! Multi-head scaled dot-product self-attention over a whole sequence.
//!
//! ```text
//! Q, K, V = x·Wq + bq, x·Wk + bk, x·Wv + bv
//! head_h  = softmax(Q_h K_hᵀ / √d_h) V_h
//! y       = concat(head_1..head_H)·Wo + bo
//! ```
//!
//! No causal mask: every frame attends to every other frame.

use rand::Rng;

use super::activation::{softmax_rows, softmax_rows_backward};
use super::linear::Linear;
use super::params::{join, Parameters};
use super::Tensor2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MultiHeadAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub n_heads: usize,
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    x: Tensor2,
    q: Tensor2,
    k: Tensor2,
    v: Tensor2,
    weights: Vec<Tensor2>,
    concat: Tensor2,
}

impl AttentionCache {
    /// Row-stochastic attention weights, one `T × T` matrix per head.
    pub fn weights(&self) -> &[Tensor2] {
        &self.weights
    }
}

impl MultiHeadAttention {
    pub fn new<R: Rng + ?Sized>(dim: usize, n_heads: usize, rng: &mut R) -> Result<Self> {
        check_heads(dim, n_heads)?;
        Ok(Self {
            query: Linear::new(dim, dim, rng),
            key: Linear::new(dim, dim, rng),
            value: Linear::new(dim, dim, rng),
            output: Linear::new(dim, dim, rng),
            n_heads,
        })
    }

    pub fn zeros(dim: usize, n_heads: usize) -> Self {
        Self {
            query: Linear::zeros(dim, dim),
            key: Linear::zeros(dim, dim),
            value: Linear::zeros(dim, dim),
            output: Linear::zeros(dim, dim),
            n_heads,
        }
    }

    pub fn dim(&self) -> usize {
        self.query.din()
    }

    pub fn forward(&self, x: &Tensor2) -> Result<(Tensor2, AttentionCache)> {
        let dim = self.dim();
        check_heads(dim, self.n_heads)?;
        let head_dim = dim / self.n_heads;
        let scale = 1.0 / (head_dim as f64).sqrt();

        let q = self.query.forward(x)?;
        let k = self.key.forward(x)?;
        let v = self.value.forward(x)?;

        let mut concat = Tensor2::zeros(x.rows(), dim);
        let mut weights = Vec::with_capacity(self.n_heads);
        for h in 0..self.n_heads {
            let off = h * head_dim;
            let qh = q.slice_cols(off, head_dim);
            let kh = k.slice_cols(off, head_dim);
            let vh = v.slice_cols(off, head_dim);
            let mut scores = qh.matmul_t(&kh);
            scores.scale(scale);
            let w = softmax_rows(&scores);
            let out = w.matmul(&vh);
            for r in 0..out.rows() {
                concat.row_mut(r)[off..off + head_dim].copy_from_slice(out.row(r));
            }
            weights.push(w);
        }
        let y = self.output.forward(&concat)?;
        Ok((
            y,
            AttentionCache {
                x: x.clone(),
                q,
                k,
                v,
                weights,
                concat,
            },
        ))
    }

    pub fn backward(
        &self,
        cache: &AttentionCache,
        dy: &Tensor2,
        grad: &mut MultiHeadAttention,
    ) -> Result<Tensor2> {
        let dim = self.dim();
        let head_dim = dim / self.n_heads;
        let scale = 1.0 / (head_dim as f64).sqrt();
        let t = dy.rows();

        let dconcat = self.output.backward(&cache.concat, dy, &mut grad.output)?;
        let mut dq = Tensor2::zeros(t, dim);
        let mut dk = Tensor2::zeros(t, dim);
        let mut dv = Tensor2::zeros(t, dim);
        for h in 0..self.n_heads {
            let off = h * head_dim;
            let qh = cache.q.slice_cols(off, head_dim);
            let kh = cache.k.slice_cols(off, head_dim);
            let vh = cache.v.slice_cols(off, head_dim);
            let w = &cache.weights[h];
            let dout = dconcat.slice_cols(off, head_dim);

            let dw = dout.matmul_t(&vh);
            let dvh = w.t_matmul(&dout);
            let mut dscores = softmax_rows_backward(w, &dw);
            dscores.scale(scale);
            let dqh = dscores.matmul(&kh);
            let dkh = dscores.t_matmul(&qh);
            for r in 0..t {
                dq.row_mut(r)[off..off + head_dim].copy_from_slice(dqh.row(r));
                dk.row_mut(r)[off..off + head_dim].copy_from_slice(dkh.row(r));
                dv.row_mut(r)[off..off + head_dim].copy_from_slice(dvh.row(r));
            }
        }
        let mut dx = self.query.backward(&cache.x, &dq, &mut grad.query)?;
        dx.add_assign(&self.key.backward(&cache.x, &dk, &mut grad.key)?);
        dx.add_assign(&self.value.backward(&cache.x, &dv, &mut grad.value)?);
        Ok(dx)
    }
}

fn check_heads(dim: usize, n_heads: usize) -> Result<()> {
    if n_heads == 0 || !dim.is_multiple_of(n_heads) {
        return Err(Error::InvalidArgument(format!(
            "model width {dim} is not divisible by {n_heads} heads"
        )));
    }
    Ok(())
}

impl Parameters for MultiHeadAttention {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor2)) {
        self.query.visit(&join(prefix, "query"), f);
        self.key.visit(&join(prefix, "key"), f);
        self.value.visit(&join(prefix, "value"), f);
        self.output.visit(&join(prefix, "output"), f);
    }

    fn visit_mut<'a>(&'a mut self, f: &mut dyn FnMut(&'a mut Tensor2)) {
        self.query.visit_mut(f);
        self.key.visit_mut(f);
        self.value.visit_mut(f);
        self.output.visit_mut(f);
    }
}

use super::params::{join, Parameters};
use super::Tensor2;
use crate::error::{Error, Result};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Per-row normalization with learned gain and bias (`1 × D` each).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: Tensor2,
    pub bias: Tensor2,
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    xhat: Tensor2,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            gain: Tensor2::filled(1, dim, 1.0),
            bias: Tensor2::zeros(1, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            gain: Tensor2::zeros(1, dim),
            bias: Tensor2::zeros(1, dim),
        }
    }

    pub fn forward(&self, x: &Tensor2) -> Result<(Tensor2, LayerNormCache)> {
        let d = x.cols();
        if d < 2 {
            return Err(Error::Shape("layer norm needs at least 2 columns".into()));
        }
        if self.gain.cols() != d {
            return Err(Error::Shape(format!(
                "layer norm width {} applied to {d} columns",
                self.gain.cols()
            )));
        }
        let mut xhat = Tensor2::zeros(x.rows(), d);
        let mut y = Tensor2::zeros(x.rows(), d);
        let mut inv_std = Vec::with_capacity(x.rows());
        for r in 0..x.rows() {
            let row = x.row(r);
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            inv_std.push(is);
            let xh = xhat.row_mut(r);
            for (o, v) in xh.iter_mut().zip(row) {
                *o = (v - mean) * is;
            }
            let yr = y.row_mut(r);
            for c in 0..d {
                yr[c] = xhat[(r, c)] * self.gain.as_slice()[c] + self.bias.as_slice()[c];
            }
        }
        Ok((y, LayerNormCache { xhat, inv_std }))
    }

    pub fn backward(
        &self,
        cache: &LayerNormCache,
        dy: &Tensor2,
        grad: &mut LayerNorm,
    ) -> Tensor2 {
        let d = dy.cols();
        let gain = self.gain.as_slice();
        let mut dx = Tensor2::zeros(dy.rows(), d);
        for r in 0..dy.rows() {
            let xh = cache.xhat.row(r);
            let g = dy.row(r);
            let mut mean_dxh = 0.0;
            let mut mean_dxh_xh = 0.0;
            for c in 0..d {
                grad.gain.as_mut_slice()[c] += g[c] * xh[c];
                grad.bias.as_mut_slice()[c] += g[c];
                let dxh = g[c] * gain[c];
                mean_dxh += dxh;
                mean_dxh_xh += dxh * xh[c];
            }
            mean_dxh /= d as f64;
            mean_dxh_xh /= d as f64;
            let is = cache.inv_std[r];
            for (c, o) in dx.row_mut(r).iter_mut().enumerate() {
                *o = is * (g[c] * gain[c] - mean_dxh - xh[c] * mean_dxh_xh);
            }
        }
        dx
    }
}

impl Parameters for LayerNorm {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor2)) {
        f(join(prefix, "gain"), &self.gain);
        f(join(prefix, "bias"), &self.bias);
    }

    fn visit_mut<'a>(&'a mut self, f: &mut dyn FnMut(&'a mut Tensor2)) {
        f(&mut self.gain);
        f(&mut self.bias);
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::nn::testing::{finite_diff, rel_error};

    #[test]
    fn unit_gain_rows_are_standardized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor2::uniform(6, 10, 5.0, &mut rng);
        let (y, _) = LayerNorm::new(10).forward(&x).unwrap();
        for row in y.iter_rows() {
            let mean = row.iter().sum::<f64>() / 10.0;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 10.0;
            assert!(mean.abs() < 1e-6);
            assert!((var - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn constant_row_maps_to_bias() {
        let mut ln = LayerNorm::new(4);
        ln.bias = Tensor2::from_vec(1, 4, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let (y, _) = ln.forward(&Tensor2::filled(1, 4, 3.0)).unwrap();
        assert_eq!(y.as_slice(), ln.bias.as_slice());
    }

    #[test]
    fn single_column_is_rejected() {
        assert!(LayerNorm::new(1).forward(&Tensor2::zeros(2, 1)).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ln = LayerNorm {
            gain: Tensor2::uniform(1, 6, 1.5, &mut rng),
            bias: Tensor2::uniform(1, 6, 1.0, &mut rng),
        };
        let x = Tensor2::uniform(4, 6, 2.0, &mut rng);
        let probe = Tensor2::uniform(4, 6, 1.0, &mut rng);
        let loss = |l: &LayerNorm, x: &Tensor2| -> f64 {
            let (y, _) = l.forward(x).unwrap();
            y.as_slice().iter().zip(probe.as_slice()).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = ln.forward(&x).unwrap();
        let mut grad = LayerNorm::zeros(6);
        let dx = ln.backward(&cache, &probe, &mut grad);
        assert!(rel_error(&dx, &finite_diff(&x, |xp| loss(&ln, xp))) < 1e-4);
        let num_gain = finite_diff(&ln.gain, |g| {
            let mut l = ln.clone();
            l.gain = g.clone();
            loss(&l, &x)
        });
        assert!(rel_error(&grad.gain, &num_gain) < 1e-4);
        let num_bias = finite_diff(&ln.bias, |b| {
            let mut l = ln.clone();
            l.bias = b.clone();
            loss(&l, &x)
        });
        assert!(rel_error(&grad.bias, &num_bias) < 1e-4);
    }
}

use rand::Rng;

use super::params::{join, Parameters};
use super::Tensor2;
use crate::error::{Error, Result};

/// `y = x·W + b` for `x: T×Din`, `W: Din×Dout`, `b: 1×Dout`.
pub fn linear(x: &Tensor2, weight: &Tensor2, bias: &Tensor2) -> Result<Tensor2> {
    if x.cols() != weight.rows() || bias.shape() != (1, weight.cols()) {
        return Err(Error::Shape(format!(
            "linear: x {:?}, W {:?}, b {:?}",
            x.shape(),
            weight.shape(),
            bias.shape()
        )));
    }
    let mut y = Tensor2::zeros(x.rows(), weight.cols());
    for r in 0..y.rows() {
        y.row_mut(r).copy_from_slice(bias.as_slice());
    }
    super::tensor::gemm(x, false, weight, false, &mut y, 1.0);
    Ok(y)
}

#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub dx: Tensor2,
    pub dweight: Tensor2,
    pub dbias: Tensor2,
}

pub fn linear_backward(x: &Tensor2, weight: &Tensor2, dy: &Tensor2) -> Result<LinearGrads> {
    if x.rows() != dy.rows() || x.cols() != weight.rows() || dy.cols() != weight.cols() {
        return Err(Error::Shape(format!(
            "linear_backward: x {:?}, W {:?}, dy {:?}",
            x.shape(),
            weight.shape(),
            dy.shape()
        )));
    }
    Ok(LinearGrads {
        dx: dy.matmul_t(weight),
        dweight: x.t_matmul(dy),
        dbias: dy.sum_rows(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Tensor2,
    pub bias: Tensor2,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(din: usize, dout: usize, rng: &mut R) -> Self {
        Self {
            weight: Tensor2::xavier(din, dout, din, dout, rng),
            bias: Tensor2::zeros(1, dout),
        }
    }

    pub fn zeros(din: usize, dout: usize) -> Self {
        Self {
            weight: Tensor2::zeros(din, dout),
            bias: Tensor2::zeros(1, dout),
        }
    }

    pub fn din(&self) -> usize {
        self.weight.rows()
    }

    pub fn dout(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, x: &Tensor2) -> Result<Tensor2> {
        linear(x, &self.weight, &self.bias)
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &Tensor2, dy: &Tensor2, grad: &mut Linear) -> Result<Tensor2> {
        let g = linear_backward(x, &self.weight, dy)?;
        grad.weight.add_assign(&g.dweight);
        grad.bias.add_assign(&g.dbias);
        Ok(g.dx)
    }
}

impl Parameters for Linear {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor2)) {
        f(join(prefix, "weight"), &self.weight);
        f(join(prefix, "bias"), &self.bias);
    }

    fn visit_mut<'a>(&'a mut self, f: &mut dyn FnMut(&'a mut Tensor2)) {
        f(&mut self.weight);
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
    fn identity_weight_is_identity_map() {
        let x = Tensor2::from_vec(2, 3, vec![1.0, -2.0, 3.5, 0.0, 4.0, -1.0]).unwrap();
        let y = linear(&x, &Tensor2::identity(3), &Tensor2::zeros(1, 3)).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn bias_gradient_of_sum_counts_rows() {
        let x = Tensor2::filled(7, 2, 0.3);
        let w = Tensor2::filled(2, 4, 0.1);
        let g = linear_backward(&x, &w, &Tensor2::filled(7, 4, 1.0)).unwrap();
        assert!(g.dbias.as_slice().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let x = Tensor2::zeros(2, 3);
        assert!(linear(&x, &Tensor2::zeros(4, 2), &Tensor2::zeros(1, 2)).is_err());
        assert!(linear(&x, &Tensor2::zeros(3, 2), &Tensor2::zeros(1, 3)).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = Linear {
            weight: Tensor2::uniform(4, 3, 1.0, &mut rng),
            bias: Tensor2::uniform(1, 3, 1.0, &mut rng),
        };
        let x = Tensor2::uniform(5, 4, 1.0, &mut rng);
        let probe = Tensor2::uniform(5, 3, 1.0, &mut rng);
        let loss = |l: &Linear, x: &Tensor2| -> f64 {
            let y = l.forward(x).unwrap();
            y.as_slice().iter().zip(probe.as_slice()).map(|(a, b)| a * b).sum()
        };
        let mut grad = Linear::zeros(4, 3);
        let dx = layer.backward(&x, &probe, &mut grad).unwrap();

        let num_dx = finite_diff(&x, |xp| loss(&layer, xp));
        assert!(rel_error(&dx, &num_dx) < 1e-6);
        let num_dw = finite_diff(&layer.weight, |w| {
            let mut l = layer.clone();
            l.weight = w.clone();
            loss(&l, &x)
        });
        assert!(rel_error(&grad.weight, &num_dw) < 1e-6);
        let num_db = finite_diff(&layer.bias, |b| {
            let mut l = layer.clone();
            l.bias = b.clone();
            loss(&l, &x)
        });
        assert!(rel_error(&grad.bias, &num_db) < 1e-6);
    }
}

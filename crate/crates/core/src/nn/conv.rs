use rand::Rng;

use super::params::{join, Parameters};
use super::Tensor2;
use crate::error::{Error, Result};

/// 1-D convolution along time with zero "same" padding.
///
/// `weight` is laid out as `(kernel_size · Din) × Dout`, row `j·Din + c`
/// holding tap `j` of input channel `c`, so the forward pass is a single
/// product of the unfolded input with `weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub weight: Tensor2,
    pub bias: Tensor2,
    pub kernel_size: usize,
}

impl Conv1d {
    pub fn new<R: Rng + ?Sized>(
        din: usize,
        dout: usize,
        kernel_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        check_kernel(kernel_size)?;
        Ok(Self {
            weight: Tensor2::xavier(
                kernel_size * din,
                dout,
                kernel_size * din,
                kernel_size * dout,
                rng,
            ),
            bias: Tensor2::zeros(1, dout),
            kernel_size,
        })
    }

    pub fn zeros(din: usize, dout: usize, kernel_size: usize) -> Self {
        Self {
            weight: Tensor2::zeros(kernel_size * din, dout),
            bias: Tensor2::zeros(1, dout),
            kernel_size,
        }
    }

    pub fn din(&self) -> usize {
        self.weight.rows() / self.kernel_size
    }

    pub fn dout(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, x: &Tensor2) -> Result<Tensor2> {
        check_kernel(self.kernel_size)?;
        if x.cols() != self.din() {
            return Err(Error::Shape(format!(
                "conv1d expects {} channels, got {}",
                self.din(),
                x.cols()
            )));
        }
        let cols = unfold(x, self.kernel_size);
        super::linear::linear(&cols, &self.weight, &self.bias)
    }

    pub fn backward(&self, x: &Tensor2, dy: &Tensor2, grad: &mut Conv1d) -> Result<Tensor2> {
        let cols = unfold(x, self.kernel_size);
        let g = super::linear::linear_backward(&cols, &self.weight, dy)?;
        grad.weight.add_assign(&g.dweight);
        grad.bias.add_assign(&g.dbias);
        Ok(fold(&g.dx, x.cols(), self.kernel_size))
    }
}

fn check_kernel(kernel_size: usize) -> Result<()> {
    if kernel_size.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "conv1d kernel size must be odd, got {kernel_size}"
        )));
    }
    Ok(())
}

/// im2col: row `t` holds frames `t - pad ..= t + pad` side by side.
fn unfold(x: &Tensor2, kernel_size: usize) -> Tensor2 {
    let (t, d) = x.shape();
    let pad = kernel_size / 2;
    let mut out = Tensor2::zeros(t, kernel_size * d);
    for r in 0..t {
        let row = out.row_mut(r);
        for j in 0..kernel_size {
            let src = r as isize + j as isize - pad as isize;
            if src >= 0 && (src as usize) < t {
                row[j * d..(j + 1) * d].copy_from_slice(x.row(src as usize));
            }
        }
    }
    out
}

fn fold(cols: &Tensor2, d: usize, kernel_size: usize) -> Tensor2 {
    let t = cols.rows();
    let pad = kernel_size / 2;
    let mut dx = Tensor2::zeros(t, d);
    for r in 0..t {
        let row = cols.row(r);
        for j in 0..kernel_size {
            let dst = r as isize + j as isize - pad as isize;
            if dst >= 0 && (dst as usize) < t {
                for (o, v) in dx.row_mut(dst as usize).iter_mut().zip(&row[j * d..(j + 1) * d]) {
                    *o += v;
                }
            }
        }
    }
    dx
}

impl Parameters for Conv1d {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor2)) {
        f(join(prefix, "weight"), &self.weight);
        f(join(prefix, "bias"), &self.bias);
    }

    fn visit_mut<'a>(&'a mut self, f: &mut dyn FnMut(&'a mut Tensor2)) {
        f(&mut self.weight);
        f(&mut self.bias);
    }
}

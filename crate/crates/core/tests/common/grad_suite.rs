//! Finite-difference checks for every backward pass, one random draw of
//! shapes and values per seed.

use fsvc::nn::activation::softmax_rows_backward;
use fsvc::nn::testing::{finite_diff, finite_diff_at, rel_error, rel_error_slices};
use fsvc::nn::{
    relu, relu_backward, softmax_cross_entropy, softmax_rows, Conv1d, LayerNorm, Linear, MultiHeadAttention,
    Parameters, Tensor2,
};
use fsvc::ppg::PpgNetwork;
use fsvc::synth::{build_synthesizer, mse, SynthesizerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const OP_TOLERANCE: f64 = 1e-4;
pub const COMPOSED_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub seed: u64,
    pub rel_error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.rel_error < self.tolerance
    }
}

struct Suite {
    seed: u64,
    checks: Vec<Check>,
}

impl Suite {
    fn push(&mut self, name: impl Into<String>, rel_error: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.into(),
            seed: self.seed,
            rel_error,
            tolerance,
        });
    }

    fn input(&mut self, name: &str, x: &Tensor2, dx: &Tensor2, f: impl FnMut(&Tensor2) -> f64) {
        let e = rel_error(dx, &finite_diff(x, f));
        self.push(format!("{name}/input"), e, OP_TOLERANCE);
    }

    fn params<P: Parameters + Clone>(&mut self, name: &str, model: &P, grad: &P, tol: f64, f: impl Fn(&P) -> f64) {
        let names: Vec<String> = model.named_tensors().into_iter().map(|(n, _)| n).collect();
        for (i, g) in grad.tensors().into_iter().enumerate() {
            let num = finite_diff(model.tensors()[i], |w| {
                let mut m = model.clone();
                *m.tensors_mut()[i] = w.clone();
                f(&m)
            });
            self.push(format!("{name}/{}", names[i]), rel_error(g, &num), tol);
        }
    }
}

fn dot(a: &Tensor2, b: &Tensor2) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

/// Every op plus the small composed synthesizer for one seed.
pub fn run_seed(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Suite { seed, checks: Vec::new() };
    let t = rng.random_range(1..=8);
    let d = 2 * rng.random_range(2..=8);
    let din = rng.random_range(1..=16);
    let x = Tensor2::uniform(t, d, 1.0, &mut rng);
    let r = Tensor2::uniform(t, d, 1.0, &mut rng);

    let lin = Linear::new(din, d, &mut rng);
    let xl = Tensor2::uniform(t, din, 1.0, &mut rng);
    let mut g = Linear::zeros(din, d);
    let dx = lin.backward(&xl, &r, &mut g).unwrap();
    s.input("linear", &xl, &dx, |x| dot(&lin.forward(x).unwrap(), &r));
    s.params("linear", &lin, &g, OP_TOLERANCE, |m| dot(&m.forward(&xl).unwrap(), &r));

    // keep pre-activations away from the kink
    let xr = x.map(|v| if v.abs() < 1e-3 { 0.5 } else { v });
    s.input("relu", &xr, &relu_backward(&xr, &r), |x| dot(&relu(x), &r));

    let p = softmax_rows(&x);
    s.input("softmax", &x, &softmax_rows_backward(&p, &r), |x| dot(&softmax_rows(x), &r));

    let labels: Vec<usize> = (0..t).map(|_| rng.random_range(0..d)).collect();
    let (_, dlogits) = softmax_cross_entropy(&x, &labels).unwrap();
    s.input("cross_entropy", &x, &dlogits, |x| softmax_cross_entropy(x, &labels).unwrap().0);

    let mut ln = LayerNorm::new(d);
    ln.gain = Tensor2::uniform(1, d, 1.0, &mut rng).map(|v| v + 1.0);
    ln.bias = Tensor2::uniform(1, d, 0.5, &mut rng);
    let (_, cache) = ln.forward(&x).unwrap();
    let mut g = LayerNorm::zeros(d);
    let dx = ln.backward(&cache, &r, &mut g);
    s.input("layer_norm", &x, &dx, |x| dot(&ln.forward(x).unwrap().0, &r));
    s.params("layer_norm", &ln, &g, OP_TOLERANCE, |m| dot(&m.forward(&x).unwrap().0, &r));

    let heads = if d % 4 == 0 { 2 } else { 1 };
    let att = MultiHeadAttention::new(d, heads, &mut rng).unwrap();
    let (_, cache) = att.forward(&x).unwrap();
    let mut g = MultiHeadAttention::zeros(d, heads);
    let dx = att.backward(&cache, &r, &mut g).unwrap();
    s.input("attention", &x, &dx, |x| dot(&att.forward(x).unwrap().0, &r));
    s.params("attention", &att, &g, OP_TOLERANCE, |m| dot(&m.forward(&x).unwrap().0, &r));

    let k = [1, 3, 5][rng.random_range(0..3)];
    let dout = rng.random_range(1..=16);
    let conv = Conv1d::new(d, dout, k, &mut rng).unwrap();
    let rc = Tensor2::uniform(t, dout, 1.0, &mut rng);
    let mut g = Conv1d::zeros(d, dout, k);
    let dx = conv.backward(&x, &rc, &mut g).unwrap();
    s.input("conv1d", &x, &dx, |x| dot(&conv.forward(x).unwrap(), &rc));
    s.params("conv1d", &conv, &g, OP_TOLERANCE, |m| dot(&m.forward(&x).unwrap(), &rc));

    let n_classes = rng.random_range(2..=6);
    let ppg = PpgNetwork::new(n_classes, 8, seed);
    let frames = Tensor2::uniform(5, 39, 1.0, &mut rng);
    let ppg_labels: Vec<usize> = (0..5).map(|_| rng.random_range(0..n_classes)).collect();
    let (_, g) = ppg.loss_and_grad(&frames, &ppg_labels).unwrap();
    s.params("ppg_network", &ppg, &g, OP_TOLERANCE, |m| m.loss(&frames, &ppg_labels).unwrap());

    let cfg = SynthesizerConfig::with_dims(8, 16, 1, 2).with_seed(seed);
    let synth = build_synthesizer(&cfg).unwrap();
    let block = &synth.network.encoder[0];
    let xb = Tensor2::uniform(4, 16, 1.0, &mut rng);
    let rb = Tensor2::uniform(4, 16, 1.0, &mut rng);
    let (_, cache) = block.forward(&xb).unwrap();
    let mut g = block.clone();
    g.zero_();
    let dx = block.backward(&cache, &rb, &mut g).unwrap();
    s.input("fft_block", &xb, &dx, |x| dot(&block.forward(x).unwrap().0, &rb));
    s.params("fft_block", block, &g, OP_TOLERANCE, |m| dot(&m.forward(&xb).unwrap().0, &rb));

    let net = &synth.network;
    let ppg_in = Tensor2::uniform(4, 8, 1.0, &mut rng);
    let pros = Tensor2::uniform(4, 2, 1.0, &mut rng);
    let target = Tensor2::uniform(4, 20, 1.0, &mut rng);
    let (out, cache) = net.forward(&ppg_in, &pros).unwrap();
    let g = net.backward(&cache, &mse(&out, &target).unwrap().1).unwrap();
    s.params("synthesizer", net, &g, COMPOSED_TOLERANCE, |m| {
        mse(&m.forward(&ppg_in, &pros).unwrap().0, &target).unwrap().0
    });
    s.checks
}

/// Desk-scale synthesizer (D=64, N=2) probed at `per_tensor` random
/// coordinates of every tensor.
pub fn desk_synthesizer(seed: u64, per_tensor: usize) -> Check {
    let params = build_synthesizer(&SynthesizerConfig::default().with_seed(seed)).unwrap();
    let net = &params.network;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdead);
    let t = 6;
    let ppg = Tensor2::uniform(t, params.config.ppg_classes, 1.0, &mut rng);
    let pros = Tensor2::uniform(t, 2, 1.0, &mut rng);
    let target = Tensor2::uniform(t, 20, 1.0, &mut rng);
    let (out, cache) = net.forward(&ppg, &pros).unwrap();
    let grad = net.backward(&cache, &mse(&out, &target).unwrap().1).unwrap();
    let mut ana = Vec::new();
    let mut num = Vec::new();
    for (i, g) in grad.tensors().into_iter().enumerate() {
        let w = net.tensors()[i];
        let idx: Vec<usize> = (0..per_tensor).map(|_| rng.random_range(0..w.len())).collect();
        num.extend(finite_diff_at(w, &idx, |probe| {
            let mut n2 = net.clone();
            *n2.tensors_mut()[i] = probe.clone();
            mse(&n2.forward(&ppg, &pros).unwrap().0, &target).unwrap().0
        }));
        ana.extend(idx.iter().map(|&k| g.as_slice()[k]));
    }
    Check {
        name: "synthesizer_desk/sampled".into(),
        seed,
        rel_error: rel_error_slices(&ana, &num),
        tolerance: COMPOSED_TOLERANCE,
    }
}

//! Compare the synthesizer's hand-written backward pass against central
//! finite differences on a sample of coordinates from every tensor.
//!
//!     cargo run --release --example gradient_check

use fsvc::nn::testing::{finite_diff_at, rel_error_slices};
use fsvc::nn::{Parameters, Tensor2};
use fsvc::synth::{build_synthesizer, mse, SynthesizerConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = build_synthesizer(&SynthesizerConfig::default().with_seed(5))?;
    let net = &params.network;
    let mut rng = StdRng::seed_from_u64(5);
    let t = 12;
    let ppg = Tensor2::uniform(t, params.config.ppg_classes, 1.0, &mut rng);
    let prosody = Tensor2::uniform(t, 2, 1.0, &mut rng);
    let target = Tensor2::uniform(t, 20, 1.0, &mut rng);

    let (out, cache) = net.forward(&ppg, &prosody)?;
    let (_, dout) = mse(&out, &target)?;
    let grad = net.backward(&cache, &dout)?;

    let mut worst = (0.0, String::new());
    for (i, ((name, w), g)) in net.named_tensors().into_iter().zip(grad.tensors()).enumerate() {
        let idx: Vec<usize> = (0..6).map(|_| rng.random_range(0..w.len())).collect();
        let num = finite_diff_at(w, &idx, |probe| {
            let mut n2 = net.clone();
            *n2.tensors_mut()[i] = probe.clone();
            mse(&n2.forward(&ppg, &prosody).unwrap().0, &target).unwrap().0
        });
        let ana: Vec<f64> = idx.iter().map(|&k| g.as_slice()[k]).collect();
        let e = rel_error_slices(&ana, &num);
        if e > worst.0 {
            worst = (e, name);
        }
    }
    println!(
        "{} parameters in {} tensors; worst sampled relative error {:.2e} ({})",
        net.num_params(),
        net.tensors().len(),
        worst.0,
        worst.1
    );
    Ok(())
}

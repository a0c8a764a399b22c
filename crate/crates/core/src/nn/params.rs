use super::Tensor2;

/// Uniform access to the trainable tensors of a layer or model.
///
/// `visit` and `visit_mut` must enumerate tensors in the same order; the
/// optimizer state and the model file both rely on it.
pub trait Parameters {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor2));
    fn visit_mut<'a>(&'a mut self, f: &mut dyn FnMut(&'a mut Tensor2));

    fn named_tensors(&self) -> Vec<(String, &Tensor2)> {
        let mut out = Vec::new();
        self.visit("", &mut |name, t| out.push((name, t)));
        out
    }

    fn tensors(&self) -> Vec<&Tensor2> {
        self.named_tensors().into_iter().map(|(_, t)| t).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut out = Vec::new();
        self.visit_mut(&mut |t| out.push(t));
        out
    }

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn zero_(&mut self) {
        self.visit_mut(&mut |t| t.fill(0.0));
    }

    /// Rounds every value to the nearest `f32`, the precision of model files.
    fn round_to_f32(&mut self) {
        self.visit_mut(&mut |t| t.as_mut_slice().iter_mut().for_each(|v| *v = *v as f32 as f64));
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

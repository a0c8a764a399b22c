//! Dense layers, layer norm, self-attention, 1-D convolution and Adam with
//! hand-written backward passes, all in double precision.

pub mod activation;
pub mod adam;
pub mod attention;
pub mod conv;
pub mod linear;
pub mod norm;
pub mod params;
pub mod position;
pub mod tensor;

pub mod testing;

pub use activation::{relu, relu_backward, softmax_cross_entropy, softmax_rows};
pub use adam::{adam_step, AdamState};
pub use attention::{AttentionCache, MultiHeadAttention};
pub use conv::Conv1d;
pub use linear::{linear, linear_backward, Linear, LinearGrads};
pub use norm::{LayerNorm, LayerNormCache};
pub use params::Parameters;
pub use position::position_encoding;
pub use tensor::Tensor2;

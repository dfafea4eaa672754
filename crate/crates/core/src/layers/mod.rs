//! Differentiable building blocks: graph convolution over access points,
//! depthwise-separable convolution over subcarriers, and the Transformer
//! encoder sub-layers.
//!
//! All functions record onto a caller-owned [`Graph`](crate::autodiff::Graph)
//! and take batched `[B, ...]` inputs; a single matrix is the `B = 1` case.

mod attention;
mod encoder;
mod freq;
mod space;

pub use attention::{multi_head_attention, positional_encoding, Attention, AttentionWeights, HeadWeights};
pub use encoder::{
    decoder_forward, encoder_forward, feed_forward, layer_norm_columns, DecoderBlockWeights, DenseWeights,
    EncoderBlockWeights, EncoderWeights,
};
pub use freq::{freq_conv, freq_conv_dwc, freq_conv_pwc, FreqConvWeights};
pub use space::{compute_normalized_laplacian, renormalized_adjacency, space_conv, SpaceConvWeights};

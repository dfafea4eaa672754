//! Joint space-time-frequency channel prediction for cell-free massive MIMO.
//!
//! The predictor combines a graph convolution over the access-point axis
//! (`SpaceConv`), a depthwise-separable convolution over subcarriers
//! (`FreqConv`) and a Transformer encoder over time, and emits all `K`
//! future CSI snapshots in one forward pass. Around it sit a synthetic CSI
//! generator, correlation-driven hyper-parameter selection, baselines,
//! complexity accounting and a CFR/CIR partitioning pipeline.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the element type for the common cases.

pub mod analysis;
pub mod autodiff;
pub mod config;
pub mod error;
pub mod fsutil;
pub mod layers;
pub mod models;
pub mod pipeline;
pub mod scalar;
pub mod sim;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Array;

/// 64-bit reference precision.
pub type Array64 = tensor::Array<f64>;
/// 32-bit training precision.
pub type Array32 = tensor::Array<f32>;
pub type Graph64 = autodiff::Graph<f64>;
pub type Graph32 = autodiff::Graph<f32>;
pub type Model64 = models::PredictorModel<f64>;
pub type Model32 = models::PredictorModel<f32>;

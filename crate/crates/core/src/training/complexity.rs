use std::fmt;

use crate::autodiff::{cost, NormAxis};
use crate::models::{Activation, ModelConfig, ModelKind, PredictorModel, BASELINE_LAYERS};
use crate::scalar::Scalar;

/// Accelerator description for the time estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardwareProfile {
    /// Clock, Hz.
    pub f_hz: f64,
    /// Floating-point operations per core per cycle.
    pub n_unit: f64,
    pub n_core: f64,
}

impl Default for HardwareProfile {
    /// A 1.35 GHz, 5120-core accelerator issuing one fused multiply-add
    /// (two operations) per core per cycle.
    fn default() -> Self {
        Self { f_hz: 1.35e9, n_unit: 2.0, n_core: 5120.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityReport {
    pub kind: ModelKind,
    pub n_parameters: usize,
    /// One forward pass on a single window.
    pub n_flops: u64,
    pub memory_mb: f64,
    pub est_time_s: f64,
    pub hardware: HardwareProfile,
}

/// `4·N / 1024²` MB: parameters stored as 32-bit floats.
pub fn memory_mb(n_parameters: usize) -> f64 {
    4.0 * n_parameters as f64 / (1024.0 * 1024.0)
}

/// `FLOPs / (f · N_unit · N_core)`.
pub fn estimated_time(flops: u64, hw: &HardwareProfile) -> f64 {
    flops as f64 / (hw.f_hz * hw.n_unit * hw.n_core)
}

fn attention_flops(c: &ModelConfig, tq: u64, tk: u64) -> u64 {
    let (d, dk, dv, h) = (c.d_model as u64, c.d_k as u64, c.d_v as u64, c.heads as u64);
    let per_head = cost::matmul(tq, d, dk)
        + cost::matmul(tk, d, dk)
        + cost::matmul(tk, d, dv)
        + cost::matmul(tq, dk, tk)
        + cost::elementwise(tq * tk)
        + cost::softmax(tq * tk)
        + cost::matmul(tq, tk, dv);
    h * per_head + cost::matmul(tq, h * dv, d)
}

fn add_norm_flops(c: &ModelConfig) -> u64 {
    let (t, d) = (c.t as u64, c.d_model as u64);
    let groups = match c.norm_axis {
        NormAxis::Time => d,
        NormAxis::Feature => t,
    };
    cost::elementwise(t * d) + cost::layer_norm(t * d, groups)
}

fn dense_flops(c: &ModelConfig) -> u64 {
    let (t, d) = (c.t as u64, c.d_model as u64);
    2 * cost::matmul(t, d, d) + cost::elementwise(t * d)
}

/// Forward FLOPs for one window, derived from the configuration alone with
/// the same per-primitive costs the autodiff graph charges.
pub fn analytic_flops(c: &ModelConfig) -> u64 {
    let (t, k, l, m) = (c.t as u64, c.k as u64, c.l as u64, c.m as u64);
    let (d, hsz) = (c.d_model as u64, c.hidden as u64);
    let (lm, klm) = (l * m, k * l * m);
    match c.kind {
        ModelKind::Dnn => {
            let act = match c.activation {
                Activation::Relu => cost::elementwise(hsz),
                Activation::Identity => 0,
            };
            cost::matmul(1, t * lm, hsz) + act + cost::matmul(1, hsz, klm)
        }
        ModelKind::Rnn | ModelKind::Lstm => {
            let lstm = c.kind == ModelKind::Lstm;
            let gates = if lstm { 4 } else { 1 };
            let mut total = 0;
            for layer in 0..BASELINE_LAYERS {
                let input = if layer == 0 { lm } else { hsz };
                let step = cost::matmul(1, input, gates * hsz)
                    + cost::matmul(1, hsz, gates * hsz)
                    + cost::elementwise(gates * hsz)
                    + if lstm { 9 * cost::elementwise(hsz) } else { cost::elementwise(hsz) };
                total += t * step;
            }
            total + cost::matmul(1, hsz, klm)
        }
        kind => {
            let mut total = 0;
            if kind.uses_space() {
                total += 2 * cost::matmul(t * l, m, m);
            }
            if kind.uses_freq() {
                total += cost::depthwise_conv(t * lm, c.kernel_size as u64) + cost::matmul(t, t, lm);
            }
            let embed_in = if kind == ModelKind::Proposed { 2 * lm } else { lm };
            total += cost::matmul(t, embed_in, d) + cost::elementwise(t * d);
            let block = attention_flops(c, t, t) + dense_flops(c) + 2 * add_norm_flops(c);
            total += c.encoder_blocks as u64 * block;
            if kind == ModelKind::Transformer {
                let dec = 2 * attention_flops(c, t, t) + dense_flops(c) + 3 * add_norm_flops(c);
                total += c.decoder_blocks as u64 * dec;
            }
            total + cost::matmul(1, t * d, klm)
        }
    }
}

/// Closed-form trainable parameter count for any kind (no biases anywhere).
pub fn closed_form_parameters(c: &ModelConfig) -> usize {
    let (t, k, l, m, d, hsz) = (c.t, c.k, c.l, c.m, c.d_model, c.hidden);
    let (lm, klm) = (l * m, k * l * m);
    let attention = c.heads * (2 * d * c.d_k + d * c.d_v) + c.heads * c.d_v * d;
    let dense = 2 * d * d;
    match c.kind {
        ModelKind::Dnn => t * lm * hsz + hsz * klm,
        ModelKind::Rnn => (lm * hsz + hsz * hsz) + (hsz * hsz + hsz * hsz) + hsz * klm,
        ModelKind::Lstm => 4 * (lm * hsz + hsz * hsz) + 4 * (2 * hsz * hsz) + hsz * klm,
        kind => {
            let space = if kind.uses_space() { m * m } else { 0 };
            let freq = if kind.uses_freq() { t * (c.kernel_size * m + t) } else { 0 };
            let embed = if kind == ModelKind::Proposed { 2 * lm * d } else { lm * d };
            let decoder = if kind == ModelKind::Transformer { c.decoder_blocks * (2 * attention + dense) } else { 0 };
            space + freq + embed + c.encoder_blocks * (attention + dense) + decoder + t * d * klm
        }
    }
}

/// Parameters by enumeration of the weight arrays, FLOPs analytically.
pub fn count_complexity<S: Scalar>(model: &PredictorModel<S>, hw: &HardwareProfile) -> ComplexityReport {
    let n_parameters = model.n_parameters();
    let n_flops = analytic_flops(&model.config);
    ComplexityReport {
        kind: model.config.kind,
        n_parameters,
        n_flops,
        memory_mb: memory_mb(n_parameters),
        est_time_s: estimated_time(n_flops, hw),
        hardware: *hw,
    }
}

impl fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<12} {:>12.3e} {:>12.3e} {:>10.2} {:>12.3e}",
            self.kind.name(),
            self.n_parameters as f64,
            self.n_flops as f64,
            self.memory_mb,
            self.est_time_s
        )
    }
}

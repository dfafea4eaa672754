use std::fmt;
use std::str::FromStr;

use crate::autodiff::NormAxis;
use crate::error::{Error, Result};

/// Every predictor the crate can build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// SpaceConv + FreqConv + encoder.
    Proposed,
    /// Encoder only, on raw CSI.
    VariantA,
    /// SpaceConv + encoder.
    VariantB,
    /// FreqConv + encoder.
    VariantC,
    Dnn,
    Rnn,
    Lstm,
    /// Encoder-decoder on raw CSI.
    Transformer,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Proposed,
        ModelKind::VariantA,
        ModelKind::VariantB,
        ModelKind::VariantC,
        ModelKind::Dnn,
        ModelKind::Rnn,
        ModelKind::Lstm,
        ModelKind::Transformer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Proposed => "proposed",
            ModelKind::VariantA => "variant_a",
            ModelKind::VariantB => "variant_b",
            ModelKind::VariantC => "variant_c",
            ModelKind::Dnn => "dnn",
            ModelKind::Rnn => "rnn",
            ModelKind::Lstm => "lstm",
            ModelKind::Transformer => "transformer",
        }
    }

    pub(crate) fn code(self) -> u32 {
        Self::ALL.iter().position(|&k| k == self).expect("listed") as u32
    }

    pub(crate) fn from_code(code: u32) -> Result<Self> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or_else(|| Error::Format(format!("unknown model kind code {code}")))
    }

    pub fn uses_space(self) -> bool {
        matches!(self, ModelKind::Proposed | ModelKind::VariantB)
    }

    pub fn uses_freq(self) -> bool {
        matches!(self, ModelKind::Proposed | ModelKind::VariantC)
    }

    pub fn uses_encoder(self) -> bool {
        !matches!(self, ModelKind::Dnn | ModelKind::Rnn | ModelKind::Lstm)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }
}

/// Hidden activation of the DNN baseline. `Identity` exists for linearity probes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

/// Hyper-parameters for any model kind.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Input window length.
    pub t: usize,
    /// Prediction horizon.
    pub k: usize,
    /// Subcarriers.
    pub l: usize,
    /// Access points.
    pub m: usize,
    pub d_model: usize,
    pub heads: usize,
    pub d_k: usize,
    pub d_v: usize,
    pub kernel_size: usize,
    /// Positional-encoding coefficient.
    pub alpha: f64,
    /// Normalisation guard.
    pub eps: f64,
    /// Hidden width of the DNN/RNN/LSTM baselines.
    pub hidden: usize,
    pub encoder_blocks: usize,
    /// Only read by the transformer baseline.
    pub decoder_blocks: usize,
    pub norm_axis: NormAxis,
    pub activation: Activation,
}

impl ModelConfig {
    /// Paper-sized defaults: T = 10, d_model = 128, two heads of 64, 1×3 kernel.
    pub fn new(kind: ModelKind, t: usize, k: usize, l: usize, m: usize) -> Self {
        Self {
            kind,
            t,
            k,
            l,
            m,
            d_model: 128,
            heads: 2,
            d_k: 64,
            d_v: 64,
            kernel_size: 3,
            alpha: 1.0,
            eps: 1e-6,
            hidden: 128,
            encoder_blocks: 2,
            decoder_blocks: 2,
            norm_axis: NormAxis::Time,
            activation: Activation::Relu,
        }
    }

    /// Sets `d_model` and `heads`, with `d_k = d_v = d_model / heads` and
    /// baseline hidden width `d_model`.
    pub fn with_width(mut self, d_model: usize, heads: usize) -> Self {
        self.d_model = d_model;
        self.heads = heads;
        self.d_k = d_model / heads.max(1);
        self.d_v = self.d_k;
        self.hidden = d_model;
        self
    }

    pub fn with_kind(mut self, kind: ModelKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("T", self.t),
            ("K", self.k),
            ("L", self.l),
            ("M", self.m),
            ("d_model", self.d_model),
            ("h", self.heads),
            ("d_k", self.d_k),
            ("d_v", self.d_v),
            ("kernel_size", self.kernel_size),
            ("hidden", self.hidden),
            ("encoder_blocks", self.encoder_blocks),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.kernel_size % 2 == 0 {
            return Err(Error::Config(format!("kernel size {} must be odd", self.kernel_size)));
        }
        if self.kind.uses_freq() && self.kernel_size > self.l {
            return Err(Error::Config(format!(
                "kernel size {} exceeds subcarrier count {}",
                self.kernel_size, self.l
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) || !self.alpha.is_finite() {
            return Err(Error::Config("eps must be positive and alpha finite".into()));
        }
        Ok(())
    }
}

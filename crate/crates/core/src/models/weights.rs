use crate::error::{Error, Result};
use crate::models::config::{ModelConfig, ModelKind};
use crate::scalar::Scalar;
use crate::tensor::Array;

/// Name prefix of arrays that are stored with a model but never trained.
pub const FIXED_PREFIX: &str = "fixed.";

/// Recurrent baselines stack this many layers.
pub const BASELINE_LAYERS: usize = 2;

/// Ordered, named weight collection.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeights<S> {
    entries: Vec<(String, Array<S>)>,
}

impl<S: Scalar> Default for ModelWeights<S> {
    fn default() -> Self {
        Self { entries: Vec::new() }
    }
}

impl<S: Scalar> ModelWeights<S> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends or replaces `name`.
    pub fn insert(&mut self, name: impl Into<String>, value: Array<S>) {
        let name = name.into();
        match self.index_of(&name) {
            Some(i) => self.entries[i].1 = value,
            None => self.entries.push((name, value)),
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Array<S>> {
        self.index_of(name).map(|i| &self.entries[i].1)
    }

    /// Mutable views of the trainable arrays, in order.
    pub(crate) fn trainable_mut(&mut self) -> Vec<&mut Array<S>> {
        self.entries.iter_mut().filter(|(n, _)| Self::is_trainable(n)).map(|(_, a)| a).collect()
    }

    /// Replace an existing array, keeping its shape.
    pub fn set(&mut self, name: &str, value: Array<S>) -> Result<()> {
        let i = self
            .index_of(name)
            .ok_or_else(|| Error::Contract(format!("no weight named `{name}`")))?;
        if self.entries[i].1.shape() != value.shape() {
            return Err(Error::dim("set weight", self.entries[i].1.shape(), value.shape()));
        }
        self.entries[i].1 = value;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array<S>)> {
        self.entries.iter().map(|(n, a)| (n.as_str(), a))
    }

    pub fn is_trainable(name: &str) -> bool {
        !name.starts_with(FIXED_PREFIX)
    }

    /// Number of trainable scalars.
    pub fn n_trainable(&self) -> usize {
        self.iter().filter(|(n, _)| Self::is_trainable(n)).map(|(_, a)| a.len()).sum()
    }

    pub fn cast<T: Scalar>(&self) -> ModelWeights<T> {
        ModelWeights { entries: self.entries.iter().map(|(n, a)| (n.clone(), a.cast())).collect() }
    }
}

fn attention_layout(out: &mut Vec<(String, Vec<usize>)>, prefix: &str, c: &ModelConfig) {
    for i in 0..c.heads {
        out.push((format!("{prefix}.head{i}.w_q"), vec![c.d_model, c.d_k]));
        out.push((format!("{prefix}.head{i}.w_k"), vec![c.d_model, c.d_k]));
        out.push((format!("{prefix}.head{i}.w_v"), vec![c.d_model, c.d_v]));
    }
    out.push((format!("{prefix}.w_o"), vec![c.heads * c.d_v, c.d_model]));
}

fn dense_layout(out: &mut Vec<(String, Vec<usize>)>, prefix: &str, c: &ModelConfig) {
    out.push((format!("{prefix}.w_d1"), vec![c.d_model, c.d_model]));
    out.push((format!("{prefix}.w_d2"), vec![c.d_model, c.d_model]));
}

/// Names and shapes of every trainable array, in initialisation order.
pub fn trainable_layout(c: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let mut out = Vec::new();
    let (lm, klm) = (c.l * c.m, c.k * c.l * c.m);
    match c.kind {
        ModelKind::Dnn => {
            out.push(("dnn.w1".into(), vec![c.t * lm, c.hidden]));
            out.push(("dnn.w2".into(), vec![c.hidden, klm]));
        }
        ModelKind::Rnn | ModelKind::Lstm => {
            let (tag, gates) = if c.kind == ModelKind::Rnn { ("rnn", 1) } else { ("lstm", 4) };
            for layer in 0..BASELINE_LAYERS {
                let input = if layer == 0 { lm } else { c.hidden };
                out.push((format!("{tag}{layer}.w_x"), vec![input, gates * c.hidden]));
                out.push((format!("{tag}{layer}.w_h"), vec![c.hidden, gates * c.hidden]));
            }
            out.push(("out".into(), vec![c.hidden, klm]));
        }
        kind => {
            if kind.uses_space() {
                out.push(("space.w_s".into(), vec![c.m, c.m]));
            }
            if kind.uses_freq() {
                out.push(("freq.w_dwc".into(), vec![c.t, c.kernel_size, c.m]));
                out.push(("freq.w_pwc".into(), vec![c.t, c.t]));
            }
            let embed_in = if kind == ModelKind::Proposed { 2 * lm } else { lm };
            out.push(("embed".into(), vec![embed_in, c.d_model]));
            for b in 0..c.encoder_blocks {
                attention_layout(&mut out, &format!("enc{b}"), c);
                dense_layout(&mut out, &format!("enc{b}"), c);
            }
            if kind == ModelKind::Transformer {
                for b in 0..c.decoder_blocks {
                    attention_layout(&mut out, &format!("dec{b}.self"), c);
                    attention_layout(&mut out, &format!("dec{b}.cross"), c);
                    dense_layout(&mut out, &format!("dec{b}"), c);
                }
            }
            out.push(("out".into(), vec![c.t * c.d_model, klm]));
        }
    }
    out
}

/// Non-trainable arrays every model of this kind must carry.
pub fn fixed_layout(c: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    if c.kind.uses_space() {
        vec![(format!("{FIXED_PREFIX}a_norm"), vec![c.m, c.m])]
    } else {
        Vec::new()
    }
}

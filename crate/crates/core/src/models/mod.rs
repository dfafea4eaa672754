//! Predictor assembly: the proposed model, its ablation variants and the
//! DNN / RNN / LSTM / Transformer baselines, all behind one
//! [`PredictorModel`].
//!
//! A model maps one real-valued window `[T, L, M]` (real or imaginary part,
//! standardised) to all `K` future snapshots `[K, L, M]` in a single pass.

mod checkpoint;
mod config;
mod forward;
mod weights;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Graph, Node};
use crate::error::{Error, Result};
use crate::layers::renormalized_adjacency;
use crate::scalar::Scalar;
use crate::sim::Standardization;
use crate::tensor::Array;
use crate::training::glorot_uniform;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use config::{Activation, ModelConfig, ModelKind};
pub use weights::{fixed_layout, trainable_layout, ModelWeights, BASELINE_LAYERS, FIXED_PREFIX};

/// A configured model with its weights.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorModel<S> {
    pub config: ModelConfig,
    pub weights: ModelWeights<S>,
    /// Statistics used to standardise the training data, if known.
    pub standardization: Option<Standardization>,
}

/// Graph handles for every weight of a model, aligned with
/// [`ModelWeights::iter`] order.
#[derive(Clone, Debug)]
pub struct Bound {
    names: Vec<String>,
    nodes: Vec<Node>,
}

impl Bound {
    pub fn node(&self, name: &str) -> Result<Node> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.nodes[i])
            .ok_or_else(|| Error::Contract(format!("weight `{name}` not bound")))
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }
}

impl<S: Scalar> PredictorModel<S> {
    /// Glorot-initialised model. SpaceConv kinds start from an edgeless
    /// graph (`a_norm = I`) until [`set_adjacency`](Self::set_adjacency).
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = ModelWeights::new();
        for (name, shape) in trainable_layout(&config) {
            weights.insert(name, glorot_uniform(&mut rng, &shape));
        }
        for (name, shape) in fixed_layout(&config) {
            weights.insert(name, Array::eye(shape[0]));
        }
        Ok(Self { config, weights, standardization: None })
    }

    /// Model with every array zero (fixed arrays keep their defaults).
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        let mut model = Self::new(config, 0)?;
        for (name, shape) in trainable_layout(&model.config) {
            model.weights.set(&name, Array::zeros(&shape))?;
        }
        Ok(model)
    }

    /// Installs `D̃^{-1/2}(A + I)D̃^{-1/2}` for a raw adjacency `a`.
    pub fn set_adjacency(&mut self, a: &Array<f64>) -> Result<()> {
        if !self.config.kind.uses_space() {
            return Ok(());
        }
        if a.shape() != [self.config.m, self.config.m] {
            return Err(Error::dim("set_adjacency", a.shape(), &[self.config.m, self.config.m]));
        }
        let a_norm = renormalized_adjacency(a)?;
        self.weights.set(&format!("{FIXED_PREFIX}a_norm"), a_norm.cast())
    }

    pub fn n_parameters(&self) -> usize {
        self.weights.n_trainable()
    }

    /// Checks that the weight collection matches the configuration exactly.
    pub fn audit(&self) -> Result<()> {
        self.config.validate()?;
        let expected: Vec<_> = trainable_layout(&self.config)
            .into_iter()
            .chain(fixed_layout(&self.config))
            .collect();
        if expected.len() != self.weights.len() {
            return Err(Error::Contract(format!(
                "{} weights present, {} expected",
                self.weights.len(),
                expected.len()
            )));
        }
        for (name, shape) in expected {
            let arr = self
                .weights
                .get(&name)
                .ok_or_else(|| Error::Contract(format!("missing weight `{name}`")))?;
            if arr.shape() != shape.as_slice() {
                return Err(Error::dim("weight audit", arr.shape(), &shape));
            }
        }
        Ok(())
    }

    /// Records every weight on `g`: trainable arrays as parameters, fixed
    /// ones as constants.
    pub fn bind(&self, g: &mut Graph<S>) -> Bound {
        let mut names = Vec::with_capacity(self.weights.len());
        let mut nodes = Vec::with_capacity(self.weights.len());
        for (name, arr) in self.weights.iter() {
            let node = if ModelWeights::<S>::is_trainable(name) {
                g.param(arr.clone())
            } else {
                g.constant(arr.clone())
            };
            names.push(name.to_string());
            nodes.push(node);
        }
        Bound { names, nodes }
    }

    /// `x [B,T,L,M] → [B,K,L,M]` on a graph the caller owns.
    pub fn forward_graph(&self, g: &mut Graph<S>, bound: &Bound, x: Node) -> Result<Node> {
        forward::forward(&self.config, g, bound, x)
    }

    /// Batched inference: `[B,T,L,M] → [B,K,L,M]`.
    pub fn forward_batch(&self, windows: &Array<S>) -> Result<Array<S>> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g);
        let x = g.constant(windows.clone());
        let y = self.forward_graph(&mut g, &bound, x)?;
        Ok(g.value(y).clone())
    }

    /// Single window `[T,L,M] → [K,L,M]`.
    pub fn forward(&self, window: &Array<S>) -> Result<Array<S>> {
        let c = &self.config;
        if window.shape() != [c.t, c.l, c.m] {
            return Err(Error::dim("forward", window.shape(), &[c.t, c.l, c.m]));
        }
        let batched = window.reshape(&[1, c.t, c.l, c.m])?;
        self.forward_batch(&batched)?.reshape(&[c.k, c.l, c.m])
    }

    pub fn cast<T: Scalar>(&self) -> PredictorModel<T> {
        PredictorModel {
            config: self.config.clone(),
            weights: self.weights.cast(),
            standardization: self.standardization,
        }
    }
}

/// Predicts complex CSI `[K·L·M]` from a raw complex window `[T·L·M]`
/// (`[t][l][m]` order): each part is standardised, passed through its
/// model, and mapped back with the stored statistics.
///
/// The same model may be passed twice (weight-shared training).
pub fn predict_complex<S: Scalar>(
    model_r: &PredictorModel<S>,
    model_i: &PredictorModel<S>,
    window: &[Complex64],
    stats: Option<&Standardization>,
) -> Result<Vec<Complex64>> {
    let stats = stats
        .or(model_r.standardization.as_ref())
        .ok_or_else(|| Error::Data("standardization metadata missing".into()))?;
    let c = &model_r.config;
    if model_i.config.t != c.t || model_i.config.l != c.l || model_i.config.m != c.m || model_i.config.k != c.k {
        return Err(Error::Contract("real and imaginary models disagree on shapes".into()));
    }
    let shape = [c.t, c.l, c.m];
    if window.len() != c.t * c.l * c.m {
        return Err(Error::dim("predict_complex", &[window.len()], &shape));
    }
    let part = |f: &dyn Fn(&Complex64) -> f64| -> Result<Array<S>> {
        Array::from_vec(&shape, window.iter().map(|z| S::lit(f(z))).collect())
    };
    let re = part(&|z| (z.re - stats.mean_re) / stats.std_re)?;
    let im = part(&|z| (z.im - stats.mean_im) / stats.std_im)?;
    let pr = model_r.forward(&re)?;
    let pi = model_i.forward(&im)?;
    Ok(pr
        .data()
        .iter()
        .zip(pi.data())
        .map(|(&r, &i)| {
            Complex64::new(r.as_f64() * stats.std_re + stats.mean_re, i.as_f64() * stats.std_im + stats.mean_im)
        })
        .collect())
}

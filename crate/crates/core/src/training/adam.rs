use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Array;

/// Optimiser and schedule settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Added to `√v̂` (outside the root).
    pub eta: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 5e-4, beta1: 0.9, beta2: 0.999, eta: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eta >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid optimiser settings {self:?}")))
        }
    }
}

/// First and second moments, one pair per parameter array.
#[derive(Clone, Debug, Default)]
pub struct AdamState<S> {
    pub m: Vec<Vec<S>>,
    pub v: Vec<Vec<S>>,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(shapes: &[&[usize]]) -> Self {
        let zeros = |s: &&[usize]| vec![S::zero(); s.iter().product()];
        Self { m: shapes.iter().map(zeros).collect(), v: shapes.iter().map(zeros).collect() }
    }
}

/// One bias-corrected Adam update at step `t ≥ 1`:
/// `w ← w − lr·m̂/(√v̂ + η)`.
pub fn adam_step<S: Scalar>(
    weights: &mut [&mut Array<S>],
    grads: &[&Array<S>],
    state: &mut AdamState<S>,
    cfg: &AdamConfig,
    t: u64,
) -> Result<()> {
    if t == 0 {
        return Err(Error::Contract("Adam step counter starts at 1".into()));
    }
    if weights.len() != grads.len() || weights.len() != state.m.len() || weights.len() != state.v.len() {
        return Err(Error::dim("adam_step", &[weights.len()], &[grads.len(), state.m.len()]));
    }
    let (b1, b2) = (S::lit(cfg.beta1), S::lit(cfg.beta2));
    let (one, lr, eta) = (S::one(), S::lit(cfg.learning_rate), S::lit(cfg.eta));
    let c1 = one - S::lit(cfg.beta1.powi(t.min(i32::MAX as u64) as i32));
    let c2 = one - S::lit(cfg.beta2.powi(t.min(i32::MAX as u64) as i32));
    for (i, (w, g)) in weights.iter_mut().zip(grads).enumerate() {
        if w.shape() != g.shape() || state.m[i].len() != w.len() {
            return Err(Error::dim("adam_step", w.shape(), g.shape()));
        }
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (j, (wj, &gj)) in w.data_mut().iter_mut().zip(g.data()).enumerate() {
            m[j] = b1 * m[j] + (one - b1) * gj;
            v[j] = b2 * v[j] + (one - b2) * gj * gj;
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            *wj -= lr * m_hat / (v_hat.sqrt() + eta);
        }
    }
    Ok(())
}

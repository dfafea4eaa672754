use num_complex::Complex64;

use crate::autodiff::{Graph, Node};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reported in place of `−∞ dB` for an exact prediction.
pub const NMSE_DB_FLOOR: f64 = -300.0;

/// Mean of squared differences over all elements.
pub fn mse_loss<S: Scalar>(g: &mut Graph<S>, pred: Node, target: Node) -> Result<Node> {
    if g.shape(pred) != g.shape(target) {
        return Err(Error::dim("mse_loss", g.shape(pred), g.shape(target)));
    }
    let diff = g.sub(pred, target)?;
    let sq = g.mul(diff, diff)?;
    Ok(g.mean(sq))
}

/// `10·log₁₀(x)`, floored.
pub fn to_db(x: f64) -> f64 {
    if x > 0.0 {
        (10.0 * x.log10()).max(NMSE_DB_FLOOR)
    } else {
        NMSE_DB_FLOOR
    }
}

/// NMSE as a linear ratio with its dB value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nmse {
    pub linear: f64,
    pub db: f64,
}

impl Nmse {
    pub fn from_linear(linear: f64) -> Self {
        Self { linear, db: to_db(linear) }
    }
}

/// `‖pred − truth‖² / ‖truth‖²` for one sample.
pub fn nmse(pred: &[f64], truth: &[f64]) -> Result<Nmse> {
    if pred.len() != truth.len() {
        return Err(Error::dim("nmse", &[pred.len()], &[truth.len()]));
    }
    let energy: f64 = truth.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(Error::Data("NMSE against zero-energy truth".into()));
    }
    let err: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(Nmse::from_linear(err / energy))
}

pub fn nmse_complex(pred: &[Complex64], truth: &[Complex64]) -> Result<Nmse> {
    if pred.len() != truth.len() {
        return Err(Error::dim("nmse_complex", &[pred.len()], &[truth.len()]));
    }
    let energy: f64 = truth.iter().map(|z| z.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::Data("NMSE against zero-energy truth".into()));
    }
    let err: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).norm_sqr()).sum();
    Ok(Nmse::from_linear(err / energy))
}

/// Mean of per-sample ratios over a batch of `(pred, truth)` samples.
pub fn nmse_batch<'a>(samples: impl IntoIterator<Item = (&'a [f64], &'a [f64])>) -> Result<Nmse> {
    let mut total = 0.0;
    let mut n = 0usize;
    for (p, t) in samples {
        total += nmse(p, t)?.linear;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Data("NMSE over an empty batch".into()));
    }
    Ok(Nmse::from_linear(total / n as f64))
}

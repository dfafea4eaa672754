use std::f64::consts::FRAC_PI_2;

use crate::autodiff::{Graph, Node};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Array;

/// Sinusoidal position table `P [T × d_model]`:
/// `P[i,j] = sin(i / 10000^((j − j mod 2)/d_model) − (j mod 2)·π/2)`.
///
/// Odd columns are therefore cosines. The caller scales by α when adding.
pub fn positional_encoding<S: Scalar>(t: usize, d_model: usize) -> Array<S> {
    Array::from_fn(&[t, d_model], |k| {
        let (i, j) = (k / d_model, k % d_model);
        let parity = (j % 2) as f64;
        let rate = 10000f64.powf((j - j % 2) as f64 / d_model as f64);
        S::lit((i as f64 / rate - parity * FRAC_PI_2).sin())
    })
}

#[derive(Clone, Copy, Debug)]
pub struct HeadWeights {
    /// `[d_model × d_k]`
    pub w_q: Node,
    /// `[d_model × d_k]`
    pub w_k: Node,
    /// `[d_model × d_v]`
    pub w_v: Node,
}

#[derive(Clone, Debug)]
pub struct AttentionWeights {
    pub heads: Vec<HeadWeights>,
    /// `[h·d_v × d_model]`
    pub w_o: Node,
}

/// Result of a multi-head attention call.
pub struct Attention {
    /// `[B, T_q, d_model]`
    pub output: Node,
    /// Per head, the `[B, T_q, T_kv]` softmax weights.
    pub weights: Vec<Node>,
}

fn project<S: Scalar>(g: &mut Graph<S>, x2: Node, w: Node, b: usize, t: usize) -> Result<Node> {
    let p = g.matmul(x2, w)?;
    let cols = g.shape(p)[1];
    g.reshape(p, &[b, t, cols])
}

/// Scaled dot-product attention over `h` heads, concatenated and mixed by
/// `w_o`. Queries come from `queries [B,T_q,d]`, keys and values from
/// `context [B,T_kv,d]`; self-attention passes the same node twice.
pub fn multi_head_attention<S: Scalar>(
    g: &mut Graph<S>,
    queries: Node,
    context: Node,
    w: &AttentionWeights,
) -> Result<Attention> {
    let (qs, cs) = (g.shape(queries).to_vec(), g.shape(context).to_vec());
    if qs.len() != 3 || cs.len() != 3 || qs[0] != cs[0] || qs[2] != cs[2] {
        return Err(Error::dim("multi_head_attention", &qs, &cs));
    }
    if w.heads.is_empty() {
        return Err(Error::Contract("attention needs at least one head".into()));
    }
    let (b, tq, d) = (qs[0], qs[1], qs[2]);
    let tk = cs[1];
    let q2 = g.reshape(queries, &[b * tq, d])?;
    let c2 = if context == queries { q2 } else { g.reshape(context, &[b * tk, d])? };

    let mut outputs = Vec::with_capacity(w.heads.len());
    let mut weights = Vec::with_capacity(w.heads.len());
    for head in &w.heads {
        let q = project(g, q2, head.w_q, b, tq)?;
        let k = project(g, c2, head.w_k, b, tk)?;
        let v = project(g, c2, head.w_v, b, tk)?;
        let d_k = g.shape(q)[2];
        if g.shape(k)[2] != d_k {
            return Err(Error::dim("attention keys", g.shape(q), g.shape(k)));
        }
        let scores = g.bmm(q, k, true)?;
        let scaled = g.scale(scores, S::one() / S::lit(d_k as f64).sqrt());
        let attn = g.softmax_rows(scaled)?;
        outputs.push(g.bmm(attn, v, false)?);
        weights.push(attn);
    }
    let joined = if outputs.len() == 1 { outputs[0] } else { g.concat(&outputs, 2)? };
    let hv = g.shape(joined)[2];
    let flat = g.reshape(joined, &[b * tq, hv])?;
    let mixed = g.matmul(flat, w.w_o)?;
    let out_d = g.shape(mixed)[1];
    if out_d != d {
        return Err(Error::dim("attention output", &[b * tq, out_d], &[b * tq, d]));
    }
    let output = g.reshape(mixed, &[b, tq, d])?;
    Ok(Attention { output, weights })
}

use crate::autodiff::{Graph, Node, NormAxis};
use crate::error::{Error, Result};
use crate::layers::attention::{multi_head_attention, AttentionWeights};
use crate::scalar::Scalar;

/// Position-wise dense sub-layer weights, both `[d_model × d_model]`.
#[derive(Clone, Copy, Debug)]
pub struct DenseWeights {
    pub w_d1: Node,
    pub w_d2: Node,
}

#[derive(Clone, Debug)]
pub struct EncoderBlockWeights {
    pub attention: AttentionWeights,
    pub dense: DenseWeights,
}

/// Encoder stack plus the normalisation settings shared by its blocks.
#[derive(Clone, Debug)]
pub struct EncoderWeights {
    pub blocks: Vec<EncoderBlockWeights>,
    pub norm_axis: NormAxis,
    pub eps: f64,
}

/// Baseline decoder block: self-attention, cross-attention to the encoder
/// output, dense, each followed by add & norm.
#[derive(Clone, Debug)]
pub struct DecoderBlockWeights {
    pub self_attention: AttentionWeights,
    pub cross_attention: AttentionWeights,
    pub dense: DenseWeights,
}

/// `(x − u_j)/√(δ_j² + ε)` with mean and variance of each column taken over
/// the time rows. Accepts `[T,d]` or `[B,T,d]`.
pub fn layer_norm_columns<S: Scalar>(g: &mut Graph<S>, x: Node, eps: S) -> Result<Node> {
    g.layer_norm(x, NormAxis::Time, eps)
}

/// `relu(z·w_d1)·w_d2` applied to every row of `z [B,T,d]`.
pub fn feed_forward<S: Scalar>(g: &mut Graph<S>, z: Node, w: &DenseWeights) -> Result<Node> {
    let shape = g.shape(z).to_vec();
    if shape.len() != 3 {
        return Err(Error::Contract(format!("feed_forward expects [B,T,d], got {shape:?}")));
    }
    let rows = g.reshape(z, &[shape[0] * shape[1], shape[2]])?;
    let hidden = g.matmul(rows, w.w_d1)?;
    let hidden = g.relu(hidden);
    let out = g.matmul(hidden, w.w_d2)?;
    if g.shape(out)[1] != shape[2] {
        return Err(Error::dim("feed_forward", &shape, g.shape(out)));
    }
    g.reshape(out, &shape)
}

fn add_norm<S: Scalar>(g: &mut Graph<S>, residual: Node, update: Node, axis: NormAxis, eps: f64) -> Result<Node> {
    let sum = g.add(residual, update)?;
    g.layer_norm(sum, axis, S::lit(eps))
}

/// Runs the encoder blocks over `x [B,T,d_model]` (embeddings with the
/// positional term already added).
pub fn encoder_forward<S: Scalar>(g: &mut Graph<S>, x: Node, w: &EncoderWeights) -> Result<Node> {
    let mut h = x;
    for block in &w.blocks {
        let att = multi_head_attention(g, h, h, &block.attention)?;
        let z = add_norm(g, h, att.output, w.norm_axis, w.eps)?;
        let dense = feed_forward(g, z, &block.dense)?;
        h = add_norm(g, z, dense, w.norm_axis, w.eps)?;
    }
    Ok(h)
}

/// Decoder stack: queries start from `x`, every block also attends to
/// `memory` (the encoder output). An empty stack returns `x` unchanged.
pub fn decoder_forward<S: Scalar>(
    g: &mut Graph<S>,
    x: Node,
    memory: Node,
    blocks: &[DecoderBlockWeights],
    norm_axis: NormAxis,
    eps: f64,
) -> Result<Node> {
    let mut h = x;
    for block in blocks {
        let own = multi_head_attention(g, h, h, &block.self_attention)?;
        let z1 = add_norm(g, h, own.output, norm_axis, eps)?;
        let cross = multi_head_attention(g, z1, memory, &block.cross_attention)?;
        let z2 = add_norm(g, z1, cross.output, norm_axis, eps)?;
        let dense = feed_forward(g, z2, &block.dense)?;
        h = add_norm(g, z2, dense, norm_axis, eps)?;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::attention::HeadWeights;
    use crate::tensor::Array;

    #[test]
    fn constant_column_normalises_to_zero() {
        let mut g = Graph::<f64>::new();
        let x = g.constant(Array::from_rows(&[&[4.0, 0.0], &[4.0, 2.0]]).unwrap());
        let y = layer_norm_columns(&mut g, x, 1e-12).unwrap();
        let v = g.value(y);
        assert_eq!(v.at(0, 0), 0.0);
        assert_eq!(v.at(1, 0), 0.0);
        assert!((v.at(0, 1) + 1.0).abs() < 1e-9);
        assert!((v.at(1, 1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn column_shift_invariance() {
        let mut g = Graph::new();
        let base = Array::from_fn(&[5, 3], |k| (k as f64 * 1.3).sin());
        let shifted = Array::from_fn(&[5, 3], |k| base.data()[k] + if k % 3 == 1 { 7.5 } else { 0.0 });
        let (a, b) = (g.constant(base), g.constant(shifted));
        let (ya, yb) = (layer_norm_columns(&mut g, a, 1e-6).unwrap(), layer_norm_columns(&mut g, b, 1e-6).unwrap());
        assert!(g.value(ya).max_abs_diff(g.value(yb)) < 1e-12);
    }

    fn dense(g: &mut Graph<f64>, w1: Array<f64>, w2: Array<f64>) -> DenseWeights {
        DenseWeights { w_d1: g.param(w1), w_d2: g.param(w2) }
    }

    #[test]
    fn feed_forward_hand_values() {
        let mut g = Graph::new();
        let w = dense(&mut g, Array::eye(2), Array::from_rows(&[&[2.0, 0.0], &[0.0, 2.0]]).unwrap());
        let z = g.constant(Array::from_vec(&[1, 1, 2], vec![1.0, -1.0]).unwrap());
        let y = feed_forward(&mut g, z, &w).unwrap();
        assert_eq!(g.value(y).data(), &[2.0, 0.0]);

        let w = dense(&mut g, Array::eye(2), Array::eye(2));
        let pos = Array::from_vec(&[1, 2, 2], vec![0.5, 1.0, 0.0, 3.0]).unwrap();
        let zp = g.constant(pos.clone());
        let y = feed_forward(&mut g, zp, &w).unwrap();
        assert_eq!(g.value(y), &pos);

        let w = dense(&mut g, Array::eye(2), Array::from_fn(&[2, 2], |k| k as f64 + 1.0));
        let zn = g.constant(Array::from_vec(&[1, 1, 2], vec![-0.5, -2.0]).unwrap());
        let y = feed_forward(&mut g, zn, &w).unwrap();
        assert_eq!(g.value(y).data(), &[0.0, 0.0]);
    }

    fn zero_block(g: &mut Graph<f64>, d: usize) -> EncoderBlockWeights {
        let head = HeadWeights {
            w_q: g.param(Array::zeros(&[d, d])),
            w_k: g.param(Array::zeros(&[d, d])),
            w_v: g.param(Array::zeros(&[d, d])),
        };
        EncoderBlockWeights {
            attention: AttentionWeights { heads: vec![head], w_o: g.param(Array::zeros(&[d, d])) },
            dense: dense(g, Array::zeros(&[d, d]), Array::zeros(&[d, d])),
        }
    }

    #[test]
    fn zero_weights_collapse_to_repeated_norm() {
        let mut g = Graph::new();
        let (t, d, eps) = (6, 3, 1e-9);
        let w = EncoderWeights { blocks: vec![zero_block(&mut g, d), zero_block(&mut g, d)], norm_axis: NormAxis::Time, eps };
        let xv = Array::from_fn(&[1, t, d], |k| (k as f64 * 0.71).cos() * 3.0 + k as f64 * 0.1);
        let x = g.constant(xv);
        let out = encoder_forward(&mut g, x, &w).unwrap();
        assert_eq!(g.shape(out), &[1, t, d]);

        let mut n = x;
        for _ in 0..4 {
            n = layer_norm_columns(&mut g, n, eps).unwrap();
        }
        assert_eq!(g.value(out), g.value(n));
        let once = layer_norm_columns(&mut g, x, eps).unwrap();
        let twice = layer_norm_columns(&mut g, once, eps).unwrap();
        assert!(g.value(out).max_abs_diff(g.value(twice)) < 1e-8);
    }

    #[test]
    fn empty_decoder_is_identity() {
        let mut g = Graph::<f64>::new();
        let x = g.constant(Array::from_fn(&[2, 3, 4], |k| k as f64));
        let y = decoder_forward(&mut g, x, x, &[], NormAxis::Time, 1e-6).unwrap();
        assert_eq!(x, y);
    }
}

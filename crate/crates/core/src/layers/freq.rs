use crate::autodiff::{Graph, Node};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handles for one FreqConv layer.
///
/// `w_dwc` is `[T, D_k, M]`: one depthwise kernel per window position.
/// `w_pwc` is `[T, T]`: row `t` holds the pointwise combination producing
/// the output for window position `t`.
#[derive(Clone, Copy, Debug)]
pub struct FreqConvWeights {
    pub w_dwc: Node,
    pub w_pwc: Node,
}

/// Depthwise convolution along subcarriers of `[B, T, L, M]` with kernel
/// `[T, D_k, M]`, stride one, zero padding `(D_k − 1)/2` on both ends.
pub fn freq_conv_dwc<S: Scalar>(g: &mut Graph<S>, x: Node, w_dwc: Node) -> Result<Node> {
    g.depthwise_conv(x, w_dwc)
}

/// Pointwise combination of the per-step maps `[B, T, F]` with weights
/// `[T_out, T]`, giving `[B, T_out, F]`.
pub fn freq_conv_pwc<S: Scalar>(g: &mut Graph<S>, stack: Node, w_pwc: Node) -> Result<Node> {
    let (ws, ss) = (g.shape(w_pwc).to_vec(), g.shape(stack).to_vec());
    if ws.len() != 2 || ss.len() != 3 || ws[1] != ss[1] {
        return Err(Error::dim("freq_conv_pwc", &ss, &ws));
    }
    g.left_mix(w_pwc, stack)
}

/// Full FreqConv: depthwise over subcarriers, then pointwise across the
/// window. Input and output are `[B, T, L, M]`.
pub fn freq_conv<S: Scalar>(g: &mut Graph<S>, x: Node, w: &FreqConvWeights) -> Result<Node> {
    let shape = g.shape(x).to_vec();
    if shape.len() != 4 {
        return Err(Error::Contract(format!("freq_conv expects [B,T,L,M], got {shape:?}")));
    }
    let (b, t, l, m) = (shape[0], shape[1], shape[2], shape[3]);
    let dwc = freq_conv_dwc(g, x, w.w_dwc)?;
    let flat = g.reshape(dwc, &[b, t, l * m])?;
    let mixed = freq_conv_pwc(g, flat, w.w_pwc)?;
    g.reshape(mixed, &[b, t, l, m])
}

use crate::autodiff::{Graph, Node};
use crate::error::{Error, Result};
use crate::layers::{
    decoder_forward, encoder_forward, freq_conv, positional_encoding, space_conv, AttentionWeights, DecoderBlockWeights,
    DenseWeights, EncoderBlockWeights, EncoderWeights, FreqConvWeights, HeadWeights, SpaceConvWeights,
};
use crate::models::config::{Activation, ModelConfig, ModelKind};
use crate::models::weights::{BASELINE_LAYERS, FIXED_PREFIX};
use crate::models::Bound;
use crate::scalar::Scalar;
use crate::tensor::Array;

pub(crate) fn forward<S: Scalar>(c: &ModelConfig, g: &mut Graph<S>, w: &Bound, x: Node) -> Result<Node> {
    let shape = g.shape(x).to_vec();
    if shape.len() != 4 || shape[1..] != [c.t, c.l, c.m] {
        return Err(Error::dim("model input", &shape, &[0, c.t, c.l, c.m]));
    }
    let b = shape[0];
    let y = match c.kind {
        ModelKind::Dnn => dnn(c, g, w, x, b)?,
        ModelKind::Rnn => recurrent(c, g, w, x, b, false)?,
        ModelKind::Lstm => recurrent(c, g, w, x, b, true)?,
        _ => encoder_model(c, g, w, x, b)?,
    };
    g.reshape(y, &[b, c.k, c.l, c.m])
}

fn attention(c: &ModelConfig, w: &Bound, prefix: &str) -> Result<AttentionWeights> {
    let heads = (0..c.heads)
        .map(|i| {
            Ok(HeadWeights {
                w_q: w.node(&format!("{prefix}.head{i}.w_q"))?,
                w_k: w.node(&format!("{prefix}.head{i}.w_k"))?,
                w_v: w.node(&format!("{prefix}.head{i}.w_v"))?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(AttentionWeights { heads, w_o: w.node(&format!("{prefix}.w_o"))? })
}

fn dense(w: &Bound, prefix: &str) -> Result<DenseWeights> {
    Ok(DenseWeights { w_d1: w.node(&format!("{prefix}.w_d1"))?, w_d2: w.node(&format!("{prefix}.w_d2"))? })
}

/// `[B,T,L,M] → [B,T,d_model]`: optional SpaceConv / FreqConv features,
/// vectorised per time step, projected, plus `αP`.
fn embed<S: Scalar>(c: &ModelConfig, g: &mut Graph<S>, w: &Bound, x: Node, b: usize) -> Result<Node> {
    let (t, l, m) = (c.t, c.l, c.m);
    let space = if c.kind.uses_space() {
        let sw = SpaceConvWeights { w_s: w.node("space.w_s")?, a_norm: w.node(&format!("{FIXED_PREFIX}a_norm"))? };
        let rows = g.reshape(x, &[b * t * l, m])?;
        let s = space_conv(g, rows, &sw)?;
        Some(g.reshape(s, &[b, t, l, m])?)
    } else {
        None
    };
    let freq = if c.kind.uses_freq() {
        let fw = FreqConvWeights { w_dwc: w.node("freq.w_dwc")?, w_pwc: w.node("freq.w_pwc")? };
        Some(freq_conv(g, x, &fw)?)
    } else {
        None
    };
    let features = match (space, freq) {
        (Some(s), Some(f)) => g.concat(&[s, f], 3)?,
        (Some(s), None) => s,
        (None, Some(f)) => f,
        (None, None) => x,
    };
    let width = g.shape(features)[2] * g.shape(features)[3];
    let rows = g.reshape(features, &[b * t, width])?;
    let projected = g.matmul(rows, w.node("embed")?)?;
    let projected = g.reshape(projected, &[b, t, c.d_model])?;
    let p = positional_encoding::<S>(t, c.d_model).scale(S::lit(c.alpha));
    let tiled = Array::from_fn(&[b, t, c.d_model], |i| p.data()[i % (t * c.d_model)]);
    let p = g.constant(tiled);
    g.add(projected, p)
}

fn encoder_model<S: Scalar>(c: &ModelConfig, g: &mut Graph<S>, w: &Bound, x: Node, b: usize) -> Result<Node> {
    let embedded = embed(c, g, w, x, b)?;
    let blocks = (0..c.encoder_blocks)
        .map(|i| {
            let p = format!("enc{i}");
            Ok(EncoderBlockWeights { attention: attention(c, w, &p)?, dense: dense(w, &p)? })
        })
        .collect::<Result<_>>()?;
    let enc = EncoderWeights { blocks, norm_axis: c.norm_axis, eps: c.eps };
    let mut h = encoder_forward(g, embedded, &enc)?;
    if c.kind == ModelKind::Transformer {
        let dec: Vec<DecoderBlockWeights> = (0..c.decoder_blocks)
            .map(|i| {
                Ok(DecoderBlockWeights {
                    self_attention: attention(c, w, &format!("dec{i}.self"))?,
                    cross_attention: attention(c, w, &format!("dec{i}.cross"))?,
                    dense: dense(w, &format!("dec{i}"))?,
                })
            })
            .collect::<Result<_>>()?;
        h = decoder_forward(g, embedded, h, &dec, c.norm_axis, c.eps)?;
    }
    let flat = g.reshape(h, &[b, c.t * c.d_model])?;
    g.matmul(flat, w.node("out")?)
}

fn dnn<S: Scalar>(c: &ModelConfig, g: &mut Graph<S>, w: &Bound, x: Node, b: usize) -> Result<Node> {
    let flat = g.reshape(x, &[b, c.t * c.l * c.m])?;
    let hidden = g.matmul(flat, w.node("dnn.w1")?)?;
    let hidden = match c.activation {
        Activation::Relu => g.relu(hidden),
        Activation::Identity => hidden,
    };
    g.matmul(hidden, w.node("dnn.w2")?)
}

/// Two stacked bias-free recurrent layers (Elman or LSTM) from a zero
/// state; the dense head reads the final hidden state of the top layer.
fn recurrent<S: Scalar>(c: &ModelConfig, g: &mut Graph<S>, w: &Bound, x: Node, b: usize, lstm: bool) -> Result<Node> {
    let (t, hsz) = (c.t, c.hidden);
    let seq = g.reshape(x, &[b, t, c.l * c.m])?;
    let mut inputs = Vec::with_capacity(t);
    for s in 0..t {
        let step = g.slice(seq, 1, s, 1)?;
        inputs.push(g.reshape(step, &[b, c.l * c.m])?);
    }
    let tag = if lstm { "lstm" } else { "rnn" };
    for layer in 0..BASELINE_LAYERS {
        let w_x = w.node(&format!("{tag}{layer}.w_x"))?;
        let w_h = w.node(&format!("{tag}{layer}.w_h"))?;
        let mut h = g.constant(Array::zeros(&[b, hsz]));
        let mut cell = g.constant(Array::zeros(&[b, hsz]));
        let mut outputs = Vec::with_capacity(t);
        for &xt in &inputs {
            let a = g.matmul(xt, w_x)?;
            let r = g.matmul(h, w_h)?;
            let z = g.add(a, r)?;
            if lstm {
                let gate = |g: &mut Graph<S>, i: usize| g.slice(z, 1, i * hsz, hsz);
                let (zi, zf, zg, zo) = (gate(g, 0)?, gate(g, 1)?, gate(g, 2)?, gate(g, 3)?);
                let (i, f, cand, o) = (g.sigmoid(zi), g.sigmoid(zf), g.tanh(zg), g.sigmoid(zo));
                let keep = g.mul(f, cell)?;
                let write = g.mul(i, cand)?;
                cell = g.add(keep, write)?;
                let squashed = g.tanh(cell);
                h = g.mul(o, squashed)?;
            } else {
                h = g.tanh(z);
            }
            outputs.push(h);
        }
        inputs = outputs;
    }
    g.matmul(h_last(&inputs)?, w.node("out")?)
}

fn h_last(states: &[Node]) -> Result<Node> {
    states.last().copied().ok_or_else(|| Error::Contract("empty sequence".into()))
}

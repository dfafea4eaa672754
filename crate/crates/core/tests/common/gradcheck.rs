//! Central-difference gradient checks in f64.

use cfchanpred::autodiff::{Graph, NormAxis, Node};
use cfchanpred::layers::*;
use cfchanpred::models::{ModelConfig, ModelKind, PredictorModel};
use cfchanpred::tensor::Array;
use cfchanpred::training::mse_loss;
use cfchanpred::Result;
use rand_chacha::ChaCha8Rng;

use super::{random_array, rng};

const STEP: f64 = 1e-6;

/// `‖a − n‖ / max(‖a‖, ‖n‖)`, zero when both vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|n| n * n).sum::<f64>().sqrt());
    if scale < 1e-12 { diff } else { diff / scale }
}

/// Builds a scalar `Σ out ⊙ r` from `build`'s output so every output
/// element gets a distinct upstream gradient.
fn scalar_loss(
    g: &mut Graph<f64>,
    params: &[Node],
    build: &dyn Fn(&mut Graph<f64>, &[Node]) -> Result<Node>,
    probe: &mut Option<Array<f64>>,
    rng: &mut ChaCha8Rng,
) -> Result<Node> {
    let out = build(g, params)?;
    let shape = g.shape(out).to_vec();
    let r = probe.get_or_insert_with(|| random_array(rng, &shape, 1.0)).clone();
    let r = g.constant(r);
    let prod = g.mul(out, r)?;
    Ok(g.sum(prod))
}

/// Largest per-input relative error between backprop and central differences.
pub fn check(
    inputs: &[Array<f64>],
    build: &dyn Fn(&mut Graph<f64>, &[Node]) -> Result<Node>,
    seed: u64,
) -> Result<f64> {
    let mut rng = rng(seed ^ 0x5eed);
    let mut probe = None;
    let mut g = Graph::new();
    let nodes: Vec<Node> = inputs.iter().map(|a| g.param(a.clone())).collect();
    let loss = scalar_loss(&mut g, &nodes, build, &mut probe, &mut rng)?;
    g.backward(loss)?;
    let analytic: Vec<Vec<f64>> =
        nodes.iter().zip(inputs).map(|(&n, a)| g.grad(n).map_or(vec![0.0; a.len()], |x| x.data().to_vec())).collect();

    let eval = |values: &[Array<f64>], probe: &mut Option<Array<f64>>, rng: &mut ChaCha8Rng| -> Result<f64> {
        let mut g = Graph::new();
        let nodes: Vec<Node> = values.iter().map(|a| g.constant(a.clone())).collect();
        let loss = scalar_loss(&mut g, &nodes, build, probe, rng)?;
        Ok(g.value(loss).data()[0])
    };
    let mut worst: f64 = 0.0;
    for (i, input) in inputs.iter().enumerate() {
        let mut numeric = vec![0.0; input.len()];
        for (j, slot) in numeric.iter_mut().enumerate() {
            let mut plus = inputs.to_vec();
            let mut minus = inputs.to_vec();
            plus[i] = bump(&plus[i], j, STEP);
            minus[i] = bump(&minus[i], j, -STEP);
            *slot = (eval(&plus, &mut probe, &mut rng)? - eval(&minus, &mut probe, &mut rng)?) / (2.0 * STEP);
        }
        worst = worst.max(relative_error(&analytic[i], &numeric));
    }
    Ok(worst)
}

fn bump(a: &Array<f64>, idx: usize, delta: f64) -> Array<f64> {
    let mut v = a.data().to_vec();
    v[idx] += delta;
    Array::from_vec(a.shape(), v).expect("same shape")
}

fn attention_weights(nodes: &[Node], heads: usize) -> AttentionWeights {
    AttentionWeights {
        heads: (0..heads).map(|h| HeadWeights { w_q: nodes[3 * h], w_k: nodes[3 * h + 1], w_v: nodes[3 * h + 2] }).collect(),
        w_o: nodes[3 * heads],
    }
}

fn attention_shapes(d: usize, heads: usize, dk: usize) -> Vec<Vec<usize>> {
    let mut s = Vec::new();
    for _ in 0..heads {
        s.extend([vec![d, dk], vec![d, dk], vec![d, dk]]);
    }
    s.push(vec![heads * dk, d]);
    s
}

/// Named layer checks; each returns the worst relative error for `seed`.
pub fn layer_checks(seed: u64) -> Result<Vec<(&'static str, f64)>> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    let (b, t, l, m, d, heads, dk, kernel) = (2, 3, 4, 3, 4, 2, 2, 3);

    // SpaceConv: gradients w.r.t. input and w_s; a_norm a fixed constant.
    let mut a = random_array(&mut r, &[m, m], 1.0).map(f64::abs);
    for i in 0..m {
        for j in 0..i {
            let v = a.at(i, j);
            a = bump(&a, j * m + i, v - a.at(j, i));
        }
        a = bump(&a, i * m + i, -a.at(i, i));
    }
    let a_norm = renormalized_adjacency(&a)?;
    let build_space = move |g: &mut Graph<f64>, p: &[Node]| {
        let an = g.constant(a_norm.clone());
        space_conv(g, p[0], &SpaceConvWeights { w_s: p[1], a_norm: an })
    };
    let inputs = [random_array(&mut r, &[b * t * l, m], 1.0), random_array(&mut r, &[m, m], 1.0)];
    out.push(("space_conv", check(&inputs, &build_space, seed)?));

    let inputs = [
        random_array(&mut r, &[b, t, l, m], 1.0),
        random_array(&mut r, &[t, kernel, m], 1.0),
        random_array(&mut r, &[t, t], 1.0),
    ];
    let build_freq = |g: &mut Graph<f64>, p: &[Node]| freq_conv(g, p[0], &FreqConvWeights { w_dwc: p[1], w_pwc: p[2] });
    out.push(("freq_conv", check(&inputs, &build_freq, seed)?));

    let mut inputs = vec![random_array(&mut r, &[b, t, d], 1.0), random_array(&mut r, &[b, t + 1, d], 1.0)];
    inputs.extend(attention_shapes(d, heads, dk).iter().map(|s| random_array(&mut r, s, 0.8)));
    let build_att = |g: &mut Graph<f64>, p: &[Node]| {
        Ok(multi_head_attention(g, p[0], p[1], &attention_weights(&p[2..], heads))?.output)
    };
    out.push(("multi_head_attention", check(&inputs, &build_att, seed)?));

    for (name, axis) in [("layer_norm_time", NormAxis::Time), ("layer_norm_feature", NormAxis::Feature)] {
        let inputs = [random_array(&mut r, &[b, t, d], 1.0)];
        let build_ln = move |g: &mut Graph<f64>, p: &[Node]| g.layer_norm(p[0], axis, 1e-6);
        out.push((name, check(&inputs, &build_ln, seed)?));
    }

    let inputs = [random_array(&mut r, &[b, t, d], 1.0), random_array(&mut r, &[d, d], 1.0), random_array(&mut r, &[d, d], 1.0)];
    let build_ff = |g: &mut Graph<f64>, p: &[Node]| feed_forward(g, p[0], &DenseWeights { w_d1: p[1], w_d2: p[2] });
    out.push(("feed_forward", check(&inputs, &build_ff, seed)?));

    let att = attention_shapes(d, heads, dk);
    let mut inputs = vec![random_array(&mut r, &[b, t, d], 1.0)];
    inputs.extend(att.iter().map(|s| random_array(&mut r, s, 0.8)));
    inputs.extend([random_array(&mut r, &[d, d], 0.8), random_array(&mut r, &[d, d], 0.8)]);
    let n_att = att.len();
    let build_enc = move |g: &mut Graph<f64>, p: &[Node]| {
        let w = EncoderWeights {
            blocks: vec![EncoderBlockWeights {
                attention: attention_weights(&p[1..1 + n_att], heads),
                dense: DenseWeights { w_d1: p[1 + n_att], w_d2: p[2 + n_att] },
            }],
            norm_axis: NormAxis::Time,
            eps: 1e-6,
        };
        encoder_forward(g, p[0], &w)
    };
    out.push(("encoder_block", check(&inputs, &build_enc, seed)?));

    let mut inputs = vec![random_array(&mut r, &[b, t, d], 1.0), random_array(&mut r, &[b, t, d], 1.0)];
    inputs.extend(att.iter().map(|s| random_array(&mut r, s, 0.8)));
    inputs.extend(att.iter().map(|s| random_array(&mut r, s, 0.8)));
    inputs.extend([random_array(&mut r, &[d, d], 0.8), random_array(&mut r, &[d, d], 0.8)]);
    let build_dec = move |g: &mut Graph<f64>, p: &[Node]| {
        let block = DecoderBlockWeights {
            self_attention: attention_weights(&p[2..2 + n_att], heads),
            cross_attention: attention_weights(&p[2 + n_att..2 + 2 * n_att], heads),
            dense: DenseWeights { w_d1: p[2 + 2 * n_att], w_d2: p[3 + 2 * n_att] },
        };
        decoder_forward(g, p[0], p[1], &[block], NormAxis::Feature, 1e-6)
    };
    out.push(("decoder_block", check(&inputs, &build_dec, seed)?));

    let inputs = [random_array(&mut r, &[b, t, d], 1.0), random_array(&mut r, &[b, t, d], 1.0)];
    let build_mse = |g: &mut Graph<f64>, p: &[Node]| mse_loss(g, p[0], p[1]);
    out.push(("mse_loss", check(&inputs, &build_mse, seed)?));
    Ok(out)
}

/// Backprop vs central differences for every trainable weight of a small
/// model, with an MSE loss against a random target.
pub fn model_check(kind: ModelKind, seed: u64) -> Result<f64> {
    let mut r = rng(seed.wrapping_add(1000));
    let (t, k, l, m) = (3, 2, 3, 3);
    let cfg = ModelConfig::new(kind, t, k, l, m).with_width(4, 2);
    let mut model = PredictorModel::<f64>::new(cfg, seed)?;
    if kind.uses_space() {
        model.set_adjacency(&Array::from_fn(&[m, m], |i| if i / m == i % m { 0.0 } else { 0.5 }))?;
    }
    let x = random_array(&mut r, &[2, t, l, m], 1.0);
    let y = random_array(&mut r, &[2, k, l, m], 1.0);
    let loss_of = |model: &PredictorModel<f64>| -> Result<(f64, Graph<f64>, Vec<Node>)> {
        let mut g = Graph::new();
        let bound = model.bind(&mut g);
        let xn = g.constant(x.clone());
        let yn = g.constant(y.clone());
        let pred = model.forward_graph(&mut g, &bound, xn)?;
        let loss = mse_loss(&mut g, pred, yn)?;
        let v = g.value(loss).data()[0];
        g.backward(loss)?;
        Ok((v, g, bound.nodes().to_vec()))
    };
    let (_, g, nodes) = loss_of(&model)?;
    let names: Vec<(String, Array<f64>)> = model.weights.iter().map(|(n, a)| (n.to_string(), a.clone())).collect();
    let mut worst: f64 = 0.0;
    for ((name, arr), node) in names.iter().zip(&nodes) {
        if name.starts_with("fixed.") {
            continue;
        }
        let analytic = g.grad(*node).map_or(vec![0.0; arr.len()], |a| a.data().to_vec());
        let mut numeric = vec![0.0; arr.len()];
        for (j, slot) in numeric.iter_mut().enumerate() {
            let mut probe = model.clone();
            probe.weights.set(name, bump(arr, j, STEP))?;
            let up = loss_of(&probe)?.0;
            probe.weights.set(name, bump(arr, j, -STEP))?;
            let down = loss_of(&probe)?.0;
            *slot = (up - down) / (2.0 * STEP);
        }
        worst = worst.max(relative_error(&analytic, &numeric));
    }
    Ok(worst)
}

//! Forward kernels and local gradient rules.

use crate::autodiff::graph::{Node, NodeData, NormAxis, Op};
use crate::scalar::Scalar;
use crate::tensor::Array;

pub(crate) fn bmm_forward<S: Scalar>(
    a: &Array<S>,
    b: &Array<S>,
    trans_b: bool,
    batch: usize,
    m: usize,
    k: usize,
    n: usize,
) -> Array<S> {
    let mut out = vec![S::zero(); batch * m * n];
    let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };
    for bi in 0..batch {
        S::gemm(
            m,
            k,
            n,
            &a.data()[bi * m * k..],
            k as isize,
            1,
            &b.data()[bi * k * n..],
            rsb,
            csb,
            S::zero(),
            &mut out[bi * m * n..(bi + 1) * m * n],
        );
    }
    Array::from_parts(vec![batch, m, n], out)
}

pub(crate) fn left_mix_forward<S: Scalar>(
    w: &Array<S>,
    x: &Array<S>,
    batch: usize,
    m: usize,
    k: usize,
    n: usize,
) -> Array<S> {
    let mut out = vec![S::zero(); batch * m * n];
    for bi in 0..batch {
        S::gemm(
            m,
            k,
            n,
            w.data(),
            k as isize,
            1,
            &x.data()[bi * k * n..],
            n as isize,
            1,
            S::zero(),
            &mut out[bi * m * n..(bi + 1) * m * n],
        );
    }
    Array::from_parts(vec![batch, m, n], out)
}

pub(crate) fn softmax_forward<S: Scalar>(x: &Array<S>) -> Array<S> {
    let cols = *x.shape().last().expect("non-scalar");
    let mut out = x.data().to_vec();
    for row in out.chunks_mut(cols) {
        let max = row.iter().copied().fold(S::neg_infinity(), S::max);
        let mut total = S::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Array::from_parts(x.shape().to_vec(), out)
}

/// Group layout for normalisation: `(base offset, stride, count)` per group.
fn norm_groups(b: usize, t: usize, d: usize, axis: NormAxis) -> impl Iterator<Item = (usize, usize, usize)> {
    let groups = match axis {
        NormAxis::Time => b * d,
        NormAxis::Feature => b * t,
    };
    (0..groups).map(move |g| match axis {
        NormAxis::Time => ((g / d) * t * d + g % d, d, t),
        NormAxis::Feature => (g * d, 1, d),
    })
}

pub(crate) fn layer_norm_forward<S: Scalar>(
    x: &Array<S>,
    b: usize,
    t: usize,
    d: usize,
    axis: NormAxis,
    eps: S,
) -> (Array<S>, Vec<S>) {
    let src = x.data();
    let mut out = vec![S::zero(); src.len()];
    let mut inv_std = Vec::new();
    for (base, stride, count) in norm_groups(b, t, d, axis) {
        let nf = S::lit(count as f64);
        let idx = (0..count).map(|i| base + i * stride);
        let mean = idx.clone().map(|i| src[i]).sum::<S>() / nf;
        let var = idx.clone().map(|i| (src[i] - mean) * (src[i] - mean)).sum::<S>() / nf;
        let inv = S::one() / (var + eps).sqrt();
        for i in idx {
            out[i] = (src[i] - mean) * inv;
        }
        inv_std.push(inv);
    }
    (Array::from_parts(x.shape().to_vec(), out), inv_std)
}

/// `(outer, axis_len, inner)` decomposition of a shape around `axis`.
fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

pub(crate) fn concat_forward<S: Scalar>(parts: &[&Array<S>], axis: usize, total: usize) -> Array<S> {
    let mut shape = parts[0].shape().to_vec();
    shape[axis] = total;
    let (outer, _, inner) = split_axis(&shape, axis);
    let mut out = Vec::with_capacity(outer * total * inner);
    for o in 0..outer {
        for p in parts {
            let chunk = p.shape()[axis] * inner;
            out.extend_from_slice(&p.data()[o * chunk..(o + 1) * chunk]);
        }
    }
    Array::from_parts(shape, out)
}

pub(crate) fn slice_forward<S: Scalar>(x: &Array<S>, axis: usize, start: usize, len: usize) -> Array<S> {
    let (outer, alen, inner) = split_axis(x.shape(), axis);
    let mut out = Vec::with_capacity(outer * len * inner);
    for o in 0..outer {
        let base = (o * alen + start) * inner;
        out.extend_from_slice(&x.data()[base..base + len * inner]);
    }
    let mut shape = x.shape().to_vec();
    shape[axis] = len;
    Array::from_parts(shape, out)
}

pub(crate) fn dwc_forward<S: Scalar>(x: &Array<S>, w: &Array<S>) -> Array<S> {
    let (nb, ns, l, m) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let taps = w.shape()[1];
    let pad = taps / 2;
    let (xd, wd) = (x.data(), w.data());
    let mut out = vec![S::zero(); xd.len()];
    for b in 0..nb {
        for s in 0..ns {
            let slab = (b * ns + s) * l * m;
            let kern = s * taps * m;
            for i in 0..l {
                let orow = slab + i * m;
                for k in 0..taps {
                    let src = i + k;
                    if src < pad || src - pad >= l {
                        continue;
                    }
                    let irow = slab + (src - pad) * m;
                    let wrow = kern + k * m;
                    for j in 0..m {
                        out[orow + j] += wd[wrow + j] * xd[irow + j];
                    }
                }
            }
        }
    }
    Array::from_parts(x.shape().to_vec(), out)
}

// ---- backward -----------------------------------------------------------

fn accumulate<S: Scalar>(nodes: &[NodeData<S>], adj: &mut [Option<Array<S>>], n: Node, g: Array<S>) {
    if !nodes[n.0].requires_grad {
        return;
    }
    match &mut adj[n.0] {
        Some(acc) => acc.add_assign_unchecked(&g),
        slot @ None => *slot = Some(g),
    }
}

/// Collapse a full-size gradient onto a one-element broadcast operand.
fn reduce_to<S: Scalar>(g: Array<S>, target: &[usize]) -> Array<S> {
    if g.shape() == target {
        g
    } else {
        Array::from_parts(target.to_vec(), vec![g.sum()])
    }
}

/// `g ⊙ other`, where `other` may be a one-element broadcast operand.
fn bcast_mul<S: Scalar>(g: &Array<S>, other: &Array<S>) -> Array<S> {
    if other.len() == g.len() {
        Array::from_parts(
            g.shape().to_vec(),
            g.data().iter().zip(other.data()).map(|(&a, &b)| a * b).collect(),
        )
    } else {
        g.scale(other.data()[0])
    }
}

fn rg<S>(nodes: &[NodeData<S>], n: Node) -> bool {
    nodes[n.0].requires_grad
}

pub(crate) fn propagate<S: Scalar>(nodes: &[NodeData<S>], i: usize, g: &Array<S>, adj: &mut [Option<Array<S>>]) {
    let y = &nodes[i].value;
    let val = |n: Node| &nodes[n.0].value;
    match &nodes[i].op {
        Op::Leaf => {}
        Op::MatMul { a, b } => {
            let (va, vb) = (val(*a), val(*b));
            let (m, k, n) = (va.shape()[0], va.shape()[1], vb.shape()[1]);
            if rg(nodes, *a) {
                let mut ga = vec![S::zero(); m * k];
                S::gemm(m, n, k, g.data(), n as isize, 1, vb.data(), 1, n as isize, S::zero(), &mut ga);
                accumulate(nodes, adj, *a, Array::from_parts(vec![m, k], ga));
            }
            if rg(nodes, *b) {
                let mut gb = vec![S::zero(); k * n];
                S::gemm(k, m, n, va.data(), 1, k as isize, g.data(), n as isize, 1, S::zero(), &mut gb);
                accumulate(nodes, adj, *b, Array::from_parts(vec![k, n], gb));
            }
        }
        Op::BatchMatMul { a, b, trans_b } => {
            let (va, vb) = (val(*a), val(*b));
            let (batch, m, k) = (va.shape()[0], va.shape()[1], va.shape()[2]);
            let n = y.shape()[2];
            let (gd, ad, bd) = (g.data(), va.data(), vb.data());
            if rg(nodes, *a) {
                let mut ga = vec![S::zero(); batch * m * k];
                for bi in 0..batch {
                    let (gs, bs) = (&gd[bi * m * n..], &bd[bi * k * n..]);
                    let dst = &mut ga[bi * m * k..(bi + 1) * m * k];
                    if *trans_b {
                        S::gemm(m, n, k, gs, n as isize, 1, bs, k as isize, 1, S::zero(), dst);
                    } else {
                        S::gemm(m, n, k, gs, n as isize, 1, bs, 1, n as isize, S::zero(), dst);
                    }
                }
                accumulate(nodes, adj, *a, Array::from_parts(va.shape().to_vec(), ga));
            }
            if rg(nodes, *b) {
                let mut gb = vec![S::zero(); batch * k * n];
                for bi in 0..batch {
                    let (gs, as_) = (&gd[bi * m * n..], &ad[bi * m * k..]);
                    let dst = &mut gb[bi * k * n..(bi + 1) * k * n];
                    if *trans_b {
                        S::gemm(n, m, k, gs, 1, n as isize, as_, k as isize, 1, S::zero(), dst);
                    } else {
                        S::gemm(k, m, n, as_, 1, k as isize, gs, n as isize, 1, S::zero(), dst);
                    }
                }
                accumulate(nodes, adj, *b, Array::from_parts(vb.shape().to_vec(), gb));
            }
        }
        Op::LeftMix { w, x } => {
            let (vw, vx) = (val(*w), val(*x));
            let (m, k) = (vw.shape()[0], vw.shape()[1]);
            let (batch, n) = (vx.shape()[0], vx.shape()[2]);
            let gd = g.data();
            if rg(nodes, *w) {
                let mut gw = vec![S::zero(); m * k];
                for bi in 0..batch {
                    S::gemm(
                        m,
                        n,
                        k,
                        &gd[bi * m * n..],
                        n as isize,
                        1,
                        &vx.data()[bi * k * n..],
                        1,
                        n as isize,
                        S::one(),
                        &mut gw,
                    );
                }
                accumulate(nodes, adj, *w, Array::from_parts(vec![m, k], gw));
            }
            if rg(nodes, *x) {
                let mut gx = vec![S::zero(); batch * k * n];
                for bi in 0..batch {
                    S::gemm(
                        k,
                        m,
                        n,
                        vw.data(),
                        1,
                        k as isize,
                        &gd[bi * m * n..],
                        n as isize,
                        1,
                        S::zero(),
                        &mut gx[bi * k * n..(bi + 1) * k * n],
                    );
                }
                accumulate(nodes, adj, *x, Array::from_parts(vx.shape().to_vec(), gx));
            }
        }
        Op::Add(a, b) => {
            if rg(nodes, *a) {
                accumulate(nodes, adj, *a, reduce_to(g.clone(), val(*a).shape()));
            }
            if rg(nodes, *b) {
                accumulate(nodes, adj, *b, reduce_to(g.clone(), val(*b).shape()));
            }
        }
        Op::Sub(a, b) => {
            if rg(nodes, *a) {
                accumulate(nodes, adj, *a, reduce_to(g.clone(), val(*a).shape()));
            }
            if rg(nodes, *b) {
                accumulate(nodes, adj, *b, reduce_to(g.scale(-S::one()), val(*b).shape()));
            }
        }
        Op::Mul(a, b) => {
            if rg(nodes, *a) {
                accumulate(nodes, adj, *a, reduce_to(bcast_mul(g, val(*b)), val(*a).shape()));
            }
            if rg(nodes, *b) {
                accumulate(nodes, adj, *b, reduce_to(bcast_mul(g, val(*a)), val(*b).shape()));
            }
        }
        Op::Scale(a, c) => accumulate(nodes, adj, *a, g.scale(*c)),
        Op::Relu(a) => {
            let ga = g.zip_map(val(*a), |gv, x| if x > S::zero() { gv } else { S::zero() });
            accumulate(nodes, adj, *a, ga.expect("same shape"));
        }
        Op::Exp(a) => accumulate(nodes, adj, *a, g.zip_map(y, |gv, yv| gv * yv).expect("same shape")),
        Op::SqrtEps(a) => {
            let half = S::lit(0.5);
            accumulate(nodes, adj, *a, g.zip_map(y, |gv, yv| gv * half / yv).expect("same shape"));
        }
        Op::Tanh(a) => {
            let ga = g.zip_map(y, |gv, yv| gv * (S::one() - yv * yv));
            accumulate(nodes, adj, *a, ga.expect("same shape"));
        }
        Op::Sigmoid(a) => {
            let ga = g.zip_map(y, |gv, yv| gv * yv * (S::one() - yv));
            accumulate(nodes, adj, *a, ga.expect("same shape"));
        }
        Op::Sum(a) => {
            let shape = val(*a).shape();
            accumulate(nodes, adj, *a, Array::full(shape, g.data()[0]));
        }
        Op::Mean(a) => {
            let v = val(*a);
            let gv = g.data()[0] / S::lit(v.len() as f64);
            accumulate(nodes, adj, *a, Array::full(v.shape(), gv));
        }
        Op::Reshape(a) => {
            let shape = val(*a).shape().to_vec();
            accumulate(nodes, adj, *a, Array::from_parts(shape, g.data().to_vec()));
        }
        Op::Softmax(a) => {
            let cols = *y.shape().last().expect("non-scalar");
            let mut gx = vec![S::zero(); y.len()];
            for ((gr, yr), out) in g.data().chunks(cols).zip(y.data().chunks(cols)).zip(gx.chunks_mut(cols)) {
                let dot: S = gr.iter().zip(yr).map(|(&a, &b)| a * b).sum();
                for ((o, &gv), &yv) in out.iter_mut().zip(gr).zip(yr) {
                    *o = yv * (gv - dot);
                }
            }
            accumulate(nodes, adj, *a, Array::from_parts(y.shape().to_vec(), gx));
        }
        Op::LayerNorm { x, axis, inv_std } => {
            let shape = y.shape();
            let (b, t, d) = if shape.len() == 2 { (1, shape[0], shape[1]) } else { (shape[0], shape[1], shape[2]) };
            let (gd, yd) = (g.data(), y.data());
            let mut gx = vec![S::zero(); yd.len()];
            for ((base, stride, count), &inv) in norm_groups(b, t, d, *axis).zip(inv_std) {
                let nf = S::lit(count as f64);
                let idx = (0..count).map(|i| base + i * stride);
                let mg = idx.clone().map(|i| gd[i]).sum::<S>() / nf;
                let mgy = idx.clone().map(|i| gd[i] * yd[i]).sum::<S>() / nf;
                for i in idx {
                    gx[i] = inv * (gd[i] - mg - yd[i] * mgy);
                }
            }
            accumulate(nodes, adj, *x, Array::from_parts(shape.to_vec(), gx));
        }
        Op::Concat { parts, axis } => {
            let mut offset = 0;
            for &p in parts {
                let len = val(p).shape()[*axis];
                if rg(nodes, p) {
                    accumulate(nodes, adj, p, slice_forward(g, *axis, offset, len));
                }
                offset += len;
            }
        }
        Op::Slice { x, axis, start } => {
            let shape = val(*x).shape();
            let (outer, alen, inner) = split_axis(shape, *axis);
            let len = y.shape()[*axis];
            let mut gx = vec![S::zero(); val(*x).len()];
            for o in 0..outer {
                let dst = (o * alen + start) * inner;
                let src = o * len * inner;
                gx[dst..dst + len * inner].copy_from_slice(&g.data()[src..src + len * inner]);
            }
            accumulate(nodes, adj, *x, Array::from_parts(shape.to_vec(), gx));
        }
        Op::DepthwiseConv { x, w } => {
            let (vx, vw) = (val(*x), val(*w));
            let (nb, ns, l, m) = (vx.shape()[0], vx.shape()[1], vx.shape()[2], vx.shape()[3]);
            let taps = vw.shape()[1];
            let pad = taps / 2;
            let (xd, wd, gd) = (vx.data(), vw.data(), g.data());
            let mut gx = if rg(nodes, *x) { Some(vec![S::zero(); xd.len()]) } else { None };
            let mut gw = if rg(nodes, *w) { Some(vec![S::zero(); wd.len()]) } else { None };
            for b in 0..nb {
                for s in 0..ns {
                    let slab = (b * ns + s) * l * m;
                    let kern = s * taps * m;
                    for i in 0..l {
                        let orow = slab + i * m;
                        for k in 0..taps {
                            let src = i + k;
                            if src < pad || src - pad >= l {
                                continue;
                            }
                            let irow = slab + (src - pad) * m;
                            let wrow = kern + k * m;
                            if let Some(gx) = gx.as_mut() {
                                for j in 0..m {
                                    gx[irow + j] += wd[wrow + j] * gd[orow + j];
                                }
                            }
                            if let Some(gw) = gw.as_mut() {
                                for j in 0..m {
                                    gw[wrow + j] += xd[irow + j] * gd[orow + j];
                                }
                            }
                        }
                    }
                }
            }
            if let Some(gx) = gx {
                accumulate(nodes, adj, *x, Array::from_parts(vx.shape().to_vec(), gx));
            }
            if let Some(gw) = gw {
                accumulate(nodes, adj, *w, Array::from_parts(vw.shape().to_vec(), gw));
            }
        }
    }
}

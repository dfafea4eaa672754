use crate::autodiff::cost;
use crate::autodiff::ops;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Array;

/// Handle to a value recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node(pub(crate) usize);

impl Node {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Which axis of a `[batch, time, feature]` slab the normalisation runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NormAxis {
    /// Statistics per feature column over the time rows.
    #[default]
    Time,
    /// Conventional layer norm: statistics per time row over the features.
    Feature,
}

/// Elementwise operation kinds accepted by [`Graph::elementwise`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElementwiseOp<S> {
    Add,
    Sub,
    Mul,
    Relu,
    Exp,
    SqrtEps(S),
    Tanh,
    Sigmoid,
}

#[derive(Clone, Debug)]
pub(crate) enum Op<S> {
    Leaf,
    MatMul { a: Node, b: Node },
    BatchMatMul { a: Node, b: Node, trans_b: bool },
    LeftMix { w: Node, x: Node },
    Add(Node, Node),
    Sub(Node, Node),
    Mul(Node, Node),
    Scale(Node, S),
    Relu(Node),
    Exp(Node),
    SqrtEps(Node),
    Tanh(Node),
    Sigmoid(Node),
    Sum(Node),
    Mean(Node),
    Reshape(Node),
    Softmax(Node),
    LayerNorm { x: Node, axis: NormAxis, inv_std: Vec<S> },
    Concat { parts: Vec<Node>, axis: usize },
    Slice { x: Node, axis: usize, start: usize },
    DepthwiseConv { x: Node, w: Node },
}

impl<S> Op<S> {
    pub(crate) fn parents(&self) -> Vec<Node> {
        match self {
            Op::Leaf => vec![],
            Op::MatMul { a, b } | Op::BatchMatMul { a, b, .. } => vec![*a, *b],
            Op::LeftMix { w, x } => vec![*w, *x],
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::Scale(a, _)
            | Op::Relu(a)
            | Op::Exp(a)
            | Op::SqrtEps(a)
            | Op::Tanh(a)
            | Op::Sigmoid(a)
            | Op::Sum(a)
            | Op::Mean(a)
            | Op::Reshape(a)
            | Op::Softmax(a) => vec![*a],
            Op::LayerNorm { x, .. } | Op::Slice { x, .. } => vec![*x],
            Op::Concat { parts, .. } => parts.clone(),
            Op::DepthwiseConv { x, w } => vec![*x, *w],
        }
    }
}

pub(crate) struct NodeData<S> {
    pub(crate) value: Array<S>,
    pub(crate) grad: Option<Array<S>>,
    pub(crate) op: Op<S>,
    pub(crate) requires_grad: bool,
}

/// Append-only computation tape.
///
/// Confined to one thread while recording or differentiating; independent
/// graphs may run on separate threads.
pub struct Graph<S> {
    pub(crate) nodes: Vec<NodeData<S>>,
    flops: u64,
}

impl<S: Scalar> Default for Graph<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Graph<S> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), flops: 0 }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Forward floating-point operations charged so far.
    pub fn flops(&self) -> u64 {
        self.flops
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Array<S>) -> Node {
        self.push(value, Op::Leaf, true)
    }

    /// Non-trainable leaf (inputs, fixed matrices).
    pub fn constant(&mut self, value: Array<S>) -> Node {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, n: Node) -> &Array<S> {
        &self.nodes[n.0].value
    }

    pub fn shape(&self, n: Node) -> &[usize] {
        self.nodes[n.0].value.shape()
    }

    /// Accumulated dL/d(node), present once a backward pass reached it.
    pub fn grad(&self, n: Node) -> Option<&Array<S>> {
        self.nodes[n.0].grad.as_ref()
    }

    pub fn requires_grad(&self, n: Node) -> bool {
        self.nodes[n.0].requires_grad
    }

    pub fn parents(&self, n: Node) -> Vec<Node> {
        self.nodes[n.0].op.parents()
    }

    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }

    fn push(&mut self, value: Array<S>, op: Op<S>, requires_grad: bool) -> Node {
        self.nodes.push(NodeData { value, grad: None, op, requires_grad });
        Node(self.nodes.len() - 1)
    }

    fn derived(&mut self, value: Array<S>, op: Op<S>, flops: u64) -> Node {
        let rg = op.parents().iter().any(|p| self.nodes[p.0].requires_grad);
        self.flops += flops;
        self.push(value, op, rg)
    }

    // ---- linear algebra ------------------------------------------------

    /// `[m×k] · [k×n] → [m×n]`.
    pub fn matmul(&mut self, a: Node, b: Node) -> Result<Node> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::dim("matmul", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.derived(out, Op::MatMul { a, b }, cost::matmul(m as u64, k as u64, n as u64)))
    }

    /// Batched product `[B,m,k] · [B,k,n]`, or `[B,m,k] · [B,n,k]ᵀ` when `trans_b`.
    pub fn bmm(&mut self, a: Node, b: Node, trans_b: bool) -> Result<Node> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        let ok = sa.len() == 3
            && sb.len() == 3
            && sa[0] == sb[0]
            && if trans_b { sa[2] == sb[2] } else { sa[2] == sb[1] };
        if !ok {
            return Err(Error::dim("bmm", &sa, &sb));
        }
        let (batch, m, k) = (sa[0], sa[1], sa[2]);
        let n = if trans_b { sb[1] } else { sb[2] };
        let out = ops::bmm_forward(self.value(a), self.value(b), trans_b, batch, m, k, n);
        let flops = batch as u64 * cost::matmul(m as u64, k as u64, n as u64);
        Ok(self.derived(out, Op::BatchMatMul { a, b, trans_b }, flops))
    }

    /// Applies one `[m×k]` matrix from the left to every slab of `[B,k,n]`.
    pub fn left_mix(&mut self, w: Node, x: Node) -> Result<Node> {
        let (sw, sx) = (self.shape(w).to_vec(), self.shape(x).to_vec());
        if sw.len() != 2 || sx.len() != 3 || sw[1] != sx[1] {
            return Err(Error::dim("left_mix", &sw, &sx));
        }
        let (batch, m, k, n) = (sx[0], sw[0], sw[1], sx[2]);
        let out = ops::left_mix_forward(self.value(w), self.value(x), batch, m, k, n);
        let flops = batch as u64 * cost::matmul(m as u64, k as u64, n as u64);
        Ok(self.derived(out, Op::LeftMix { w, x }, flops))
    }

    // ---- elementwise ---------------------------------------------------

    /// Dispatch by kind; binary kinds take two operands, unary kinds one.
    pub fn elementwise(&mut self, kind: ElementwiseOp<S>, operands: &[Node]) -> Result<Node> {
        let arity = match kind {
            ElementwiseOp::Add | ElementwiseOp::Sub | ElementwiseOp::Mul => 2,
            _ => 1,
        };
        if operands.len() != arity {
            return Err(Error::Contract(format!(
                "{kind:?} takes {arity} operand(s), got {}",
                operands.len()
            )));
        }
        match kind {
            ElementwiseOp::Add => self.add(operands[0], operands[1]),
            ElementwiseOp::Sub => self.sub(operands[0], operands[1]),
            ElementwiseOp::Mul => self.mul(operands[0], operands[1]),
            ElementwiseOp::Relu => Ok(self.relu(operands[0])),
            ElementwiseOp::Exp => Ok(self.exp(operands[0])),
            ElementwiseOp::SqrtEps(eps) => self.sqrt_eps(operands[0], eps),
            ElementwiseOp::Tanh => Ok(self.tanh(operands[0])),
            ElementwiseOp::Sigmoid => Ok(self.sigmoid(operands[0])),
        }
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: Node,
        b: Node,
        f: impl Fn(S, S) -> S,
        op: Op<S>,
    ) -> Result<Node> {
        let (va, vb) = (self.value(a), self.value(b));
        let out = if va.shape() == vb.shape() {
            va.zip_map(vb, f)?
        } else if vb.len() == 1 {
            let s = vb.data()[0];
            va.map(|x| f(x, s))
        } else if va.len() == 1 {
            let s = va.data()[0];
            vb.map(|x| f(s, x))
        } else {
            return Err(Error::dim(name, va.shape(), vb.shape()));
        };
        let n = out.len() as u64;
        Ok(self.derived(out, op, cost::elementwise(n)))
    }

    pub fn add(&mut self, a: Node, b: Node) -> Result<Node> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Node, b: Node) -> Result<Node> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Node, b: Node) -> Result<Node> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Node, c: S) -> Node {
        let out = self.value(a).scale(c);
        let n = out.len() as u64;
        self.derived(out, Op::Scale(a, c), cost::elementwise(n))
    }

    fn unary(&mut self, a: Node, f: impl Fn(S) -> S, op: Op<S>) -> Node {
        let out = self.value(a).map(f);
        let n = out.len() as u64;
        self.derived(out, op, cost::elementwise(n))
    }

    pub fn relu(&mut self, a: Node) -> Node {
        self.unary(a, |x| if x > S::zero() { x } else { S::zero() }, Op::Relu(a))
    }

    pub fn exp(&mut self, a: Node) -> Node {
        self.unary(a, S::exp, Op::Exp(a))
    }

    pub fn tanh(&mut self, a: Node) -> Node {
        self.unary(a, S::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Node) -> Node {
        self.unary(a, |x| S::one() / (S::one() + (-x).exp()), Op::Sigmoid(a))
    }

    /// `sqrt(x + eps)`; fails if any `x + eps` is negative.
    pub fn sqrt_eps(&mut self, a: Node, eps: S) -> Result<Node> {
        let v = self.value(a);
        if let Some(i) = v.data().iter().position(|&x| x + eps < S::zero()) {
            return Err(Error::Domain(format!(
                "sqrt of negative value {} at flat index {i}",
                v.data()[i] + eps
            )));
        }
        let out = v.map(|x| (x + eps).sqrt());
        let n = out.len() as u64;
        Ok(self.derived(out, Op::SqrtEps(a), cost::sqrt_eps(n)))
    }

    // ---- reductions and shape ------------------------------------------

    pub fn sum(&mut self, a: Node) -> Node {
        let v = self.value(a);
        let (s, n) = (v.sum(), v.len() as u64);
        self.derived(Array::scalar(s), Op::Sum(a), cost::sum(n))
    }

    pub fn mean(&mut self, a: Node) -> Node {
        let v = self.value(a);
        let n = v.len();
        let m = v.sum() / S::lit(n as f64);
        self.derived(Array::scalar(m), Op::Mean(a), cost::mean(n as u64))
    }

    pub fn reshape(&mut self, a: Node, shape: &[usize]) -> Result<Node> {
        let out = self.value(a).reshape(shape)?;
        Ok(self.derived(out, Op::Reshape(a), 0))
    }

    /// Softmax over the last axis, with per-row max subtraction.
    pub fn softmax_rows(&mut self, a: Node) -> Result<Node> {
        let v = self.value(a);
        if !v.all_finite() {
            return Err(Error::Domain("softmax of non-finite input".into()));
        }
        let out = ops::softmax_forward(v);
        let n = out.len() as u64;
        Ok(self.derived(out, Op::Softmax(a), cost::softmax(n)))
    }

    /// Normalisation of a `[B,T,d]` (or `[T,d]`) array along `axis`.
    pub fn layer_norm(&mut self, a: Node, axis: NormAxis, eps: S) -> Result<Node> {
        let shape = self.shape(a).to_vec();
        let (b, t, d) = match shape.len() {
            2 => (1, shape[0], shape[1]),
            3 => (shape[0], shape[1], shape[2]),
            _ => return Err(Error::Contract(format!("layer_norm expects rank 2 or 3, got {shape:?}"))),
        };
        let (out, inv_std) = ops::layer_norm_forward(self.value(a), b, t, d, axis, eps);
        let groups = inv_std.len() as u64;
        let flops = cost::layer_norm(out.len() as u64, groups);
        Ok(self.derived(out, Op::LayerNorm { x: a, axis, inv_std }, flops))
    }

    /// Concatenate along `axis`; all other dimensions must agree.
    pub fn concat(&mut self, parts: &[Node], axis: usize) -> Result<Node> {
        let first = self
            .shape(*parts.first().ok_or_else(|| Error::Contract("concat of nothing".into()))?)
            .to_vec();
        if axis >= first.len() {
            return Err(Error::Contract(format!("concat axis {axis} out of range for {first:?}")));
        }
        let mut total = 0;
        for &p in parts {
            let s = self.shape(p);
            let compatible = s.len() == first.len()
                && s.iter().zip(&first).enumerate().all(|(i, (x, y))| i == axis || x == y);
            if !compatible {
                return Err(Error::dim("concat", &first, s));
            }
            total += s[axis];
        }
        let values: Vec<&Array<S>> = parts.iter().map(|&p| self.value(p)).collect();
        let out = ops::concat_forward(&values, axis, total);
        Ok(self.derived(out, Op::Concat { parts: parts.to_vec(), axis }, 0))
    }

    /// Contiguous sub-range `[start, start+len)` of `axis`.
    pub fn slice(&mut self, a: Node, axis: usize, start: usize, len: usize) -> Result<Node> {
        let shape = self.shape(a);
        if axis >= shape.len() || len == 0 || start + len > shape[axis] {
            return Err(Error::Contract(format!(
                "slice [{start}, {}) of axis {axis} out of range for {shape:?}",
                start + len
            )));
        }
        let out = ops::slice_forward(self.value(a), axis, start, len);
        Ok(self.derived(out, Op::Slice { x: a, axis, start }, 0))
    }

    /// Per-slab depthwise convolution along the third axis of `[B,S,L,M]`
    /// with kernels `[S,D_k,M]`, zero-padded to the same length.
    pub fn depthwise_conv(&mut self, x: Node, w: Node) -> Result<Node> {
        let (sx, sw) = (self.shape(x).to_vec(), self.shape(w).to_vec());
        if sx.len() != 4 || sw.len() != 3 || sx[1] != sw[0] || sx[3] != sw[2] {
            return Err(Error::dim("depthwise_conv", &sx, &sw));
        }
        let taps = sw[1];
        if taps % 2 == 0 {
            return Err(Error::Contract(format!("kernel size {taps} must be odd")));
        }
        if taps > sx[2] {
            return Err(Error::Contract(format!(
                "kernel size {taps} exceeds axis length {}",
                sx[2]
            )));
        }
        let out = ops::dwc_forward(self.value(x), self.value(w));
        let flops = cost::depthwise_conv(out.len() as u64, taps as u64);
        Ok(self.derived(out, Op::DepthwiseConv { x, w }, flops))
    }

    // ---- backward ------------------------------------------------------

    /// Reverse sweep from a one-element `loss`, accumulating into every
    /// node that requires a gradient.
    pub fn backward(&mut self, loss: Node) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut adj: Vec<Option<Array<S>>> = (0..=loss.0).map(|_| None).collect();
        adj[loss.0] = Some(Array::from_parts(self.shape(loss).to_vec(), vec![S::one()]));
        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            ops::propagate(&self.nodes, i, &g, &mut adj);
            match &mut self.nodes[i].grad {
                Some(acc) => acc.add_assign_unchecked(&g),
                slot @ None => *slot = Some(g),
            }
        }
        Ok(())
    }
}

use super::gemm::{gemm, View};
use super::{Real, Tensor};
use crate::error::{dim_err, Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

/// Which groups of a 2-D tensor [`Tape::standardize`] normalizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormAxis {
    /// Each row over its columns (layer normalization).
    Rows,
    /// Each column over all rows (batch normalization).
    Columns,
}

#[derive(Clone, Copy, Debug)]
enum BinaryKind {
    Add,
    Sub,
    Mul,
}

enum Op {
    Leaf,
    MatMul {
        a: Var,
        b: Var,
        transpose_b: bool,
        batch: usize,
        m: usize,
        k: usize,
        n: usize,
    },
    Binary {
        a: Var,
        b: Var,
        kind: BinaryKind,
        broadcast: bool,
    },
    Scale {
        a: Var,
        factor: Real,
    },
    Act {
        a: Var,
        kind: Activation,
    },
    Softmax {
        a: Var,
        outer: usize,
        len: usize,
        inner: usize,
    },
    Reshape {
        a: Var,
    },
    Concat {
        parts: Vec<(Var, usize)>,
        outer: usize,
        inner: usize,
        total: usize,
    },
    Slice {
        a: Var,
        outer: usize,
        inner: usize,
        in_len: usize,
        start: usize,
        len: usize,
    },
    Im2Col {
        a: Var,
        geom: ConvGeometry,
    },
    Standardize {
        a: Var,
        axis: NormAxis,
        rows: usize,
        cols: usize,
        xhat: Vec<Real>,
        inv_std: Vec<Real>,
    },
    Sum {
        a: Var,
    },
    Mean {
        a: Var,
    },
    Nll {
        probs: Var,
        labels: Vec<usize>,
        floor: Real,
    },
}

#[derive(Clone, Copy, Debug)]
struct ConvGeometry {
    batch: usize,
    time_in: usize,
    time_out: usize,
    channels: usize,
    kernel: usize,
    stride: usize,
    pad_left: usize,
}

impl ConvGeometry {
    /// Source time index for output step `t` and kernel tap `k`, if inside the input.
    fn source(&self, t: usize, k: usize) -> Option<usize> {
        let s = (t * self.stride + k).checked_sub(self.pad_left)?;
        (s < self.time_in).then_some(s)
    }
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Records operations in execution order and replays them backwards.
///
/// A tape is built fresh for every forward pass. Gradients accumulate
/// additively, so a value used twice receives the sum of both uses.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<Real>>>,
}

fn broadcast_ok(a: &[usize], b: &[usize]) -> Option<bool> {
    if a == b {
        Some(false)
    } else if b.len() == 1 && a.last() == Some(&b[0]) {
        Some(true)
    } else {
        None
    }
}

fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    fn derived(&mut self, shape: Vec<usize>, data: Vec<Real>, inputs: &[Var], op: Op) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].value.requires_grad);
        let value = Tensor {
            shape,
            data,
            requires_grad,
            grad: None,
        };
        self.push(value, op)
    }

    /// Records a leaf; its `requires_grad` flag decides whether it receives a gradient.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        let mut t = t;
        t.grad = None;
        self.push(t, Op::Leaf)
    }

    pub fn param(&mut self, t: Tensor) -> Var {
        self.leaf(t.with_requires_grad(true))
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.leaf(t.with_requires_grad(false))
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].value.shape
    }

    pub fn data(&self, v: Var) -> &[Real] {
        &self.nodes[v.0].value.data
    }

    /// Gradient of the last [`Tape::backward`] loss with respect to `v`.
    pub fn grad(&self, v: Var) -> Option<&[Real]> {
        self.nodes[v.0].value.grad()
    }

    /// Matrix product. Accepts `[m×k]·[k×n]` or batched `[g×m×k]·[g×k×n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_impl(a, b, false)
    }

    /// `a·bᵀ` with `b` given as `[n×k]` (or `[g×n×k]`).
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_impl(a, b, true)
    }

    fn matmul_impl(&mut self, a: Var, b: Var, transpose_b: bool) -> Result<Var> {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(b).to_vec();
        let name = if transpose_b { "matmul_nt" } else { "matmul" };
        let (batch, m, k, kb, n) = match (sa.as_slice(), sb.as_slice()) {
            ([m, k], [r, c]) => {
                let (kb, n) = if transpose_b { (*c, *r) } else { (*r, *c) };
                (1, *m, *k, kb, n)
            }
            ([g, m, k], [gb, r, c]) if g == gb => {
                let (kb, n) = if transpose_b { (*c, *r) } else { (*r, *c) };
                (*g, *m, *k, kb, n)
            }
            _ => return Err(dim_err(name, &sa, &sb)),
        };
        if k != kb {
            return Err(dim_err(name, &sa, &sb));
        }
        let mut out = vec![0.0; batch * m * n];
        {
            let ad = self.data(a);
            let bd = self.data(b);
            for g in 0..batch {
                let av = View::row_major(&ad[g * m * k..(g + 1) * m * k], k);
                let bs = &bd[g * k * n..(g + 1) * k * n];
                let bv = if transpose_b {
                    View::transposed(bs, k)
                } else {
                    View::row_major(bs, n)
                };
                gemm(m, k, n, av, bv, 0.0, &mut out[g * m * n..(g + 1) * m * n]);
            }
        }
        let shape = if sa.len() == 2 {
            vec![m, n]
        } else {
            vec![batch, m, n]
        };
        Ok(self.derived(
            shape,
            out,
            &[a, b],
            Op::MatMul {
                a,
                b,
                transpose_b,
                batch,
                m,
                k,
                n,
            },
        ))
    }

    fn binary(&mut self, a: Var, b: Var, kind: BinaryKind) -> Result<Var> {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(b);
        let broadcast = broadcast_ok(&sa, sb).ok_or_else(|| dim_err("elementwise", &sa, sb))?;
        let ad = self.data(a);
        let bd = self.data(b);
        let w = bd.len();
        let f = |x: Real, y: Real| match kind {
            BinaryKind::Add => x + y,
            BinaryKind::Sub => x - y,
            BinaryKind::Mul => x * y,
        };
        let out: Vec<Real> = ad
            .iter()
            .enumerate()
            .map(|(i, &x)| f(x, bd[if broadcast { i % w } else { i }]))
            .collect();
        Ok(self.derived(
            sa,
            out,
            &[a, b],
            Op::Binary {
                a,
                b,
                kind,
                broadcast,
            },
        ))
    }

    /// Elementwise sum; `b` may also be a vector matching the last axis of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryKind::Add)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryKind::Sub)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryKind::Mul)
    }

    pub fn scale(&mut self, a: Var, factor: Real) -> Var {
        let out = self.data(a).iter().map(|x| x * factor).collect();
        let shape = self.shape(a).to_vec();
        self.derived(shape, out, &[a], Op::Scale { a, factor })
    }

    pub fn activation(&mut self, a: Var, kind: Activation) -> Var {
        let f: fn(Real) -> Real = match kind {
            // NaN passes through so upstream corruption stays visible
            Activation::Relu => |x| if x < 0.0 { 0.0 } else { x },
            Activation::Sigmoid => |x| {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            },
            Activation::Tanh => Real::tanh,
        };
        let out = self.data(a).iter().map(|&x| f(x)).collect();
        let shape = self.shape(a).to_vec();
        self.derived(shape, out, &[a], Op::Act { a, kind })
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.activation(a, Activation::Relu)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.activation(a, Activation::Sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.activation(a, Activation::Tanh)
    }

    /// Numerically stable softmax along `axis`.
    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() {
            return Err(Error::Dimension(format!(
                "softmax axis {axis} out of range for shape {shape:?}"
            )));
        }
        let (outer, len, inner) = axis_split(&shape, axis);
        let x = self.data(a);
        let mut out = vec![0.0; x.len()];
        for o in 0..outer {
            for i in 0..inner {
                let idx = |j: usize| (o * len + j) * inner + i;
                let max = (0..len).map(|j| x[idx(j)]).fold(Real::NEG_INFINITY, Real::max);
                let mut total = 0.0;
                for j in 0..len {
                    let e = (x[idx(j)] - max).exp();
                    out[idx(j)] = e;
                    total += e;
                }
                for j in 0..len {
                    out[idx(j)] /= total;
                }
            }
        }
        Ok(self.derived(
            shape,
            out,
            &[a],
            Op::Softmax {
                a,
                outer,
                len,
                inner,
            },
        ))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let n: usize = shape.iter().product();
        let from = self.shape(a);
        if n != self.data(a).len() || shape.contains(&0) {
            return Err(Error::Dimension(format!(
                "reshape: cannot view {from:?} as {shape:?}"
            )));
        }
        let data = self.data(a).to_vec();
        Ok(self.derived(shape.to_vec(), data, &[a], Op::Reshape { a }))
    }

    /// Collapses everything after the leading axis.
    pub fn flatten(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a);
        let rows = s[0];
        let rest = s[1..].iter().product();
        self.reshape(a, &[rows, rest])
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Contract("concat of zero tensors".into()))?;
        let base = self.shape(*first).to_vec();
        if axis >= base.len() {
            return Err(Error::Dimension(format!(
                "concat axis {axis} out of range for shape {base:?}"
            )));
        }
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let s = self.shape(p);
            let compatible = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(i, (x, y))| i == axis || x == y);
            if !compatible {
                return Err(dim_err("concat", &base, s));
            }
            widths.push(s[axis]);
        }
        let (outer, _, inner) = axis_split(&base, axis);
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for (&p, &w) in parts.iter().zip(&widths) {
                let d = self.data(p);
                out.extend_from_slice(&d[o * w * inner..(o + 1) * w * inner]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        let op = Op::Concat {
            parts: parts.iter().copied().zip(widths).collect(),
            outer,
            inner,
            total,
        };
        Ok(self.derived(shape, out, parts, op))
    }

    /// Copies `len` entries starting at `start` along `axis`.
    pub fn slice(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() || len == 0 || start + len > shape[axis] {
            return Err(Error::Dimension(format!(
                "slice [{start}, {}) on axis {axis} out of range for shape {shape:?}",
                start + len
            )));
        }
        let (outer, in_len, inner) = axis_split(&shape, axis);
        let d = self.data(a);
        let mut out = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * in_len + start) * inner;
            out.extend_from_slice(&d[base..base + len * inner]);
        }
        let mut out_shape = shape;
        out_shape[axis] = len;
        Ok(self.derived(
            out_shape,
            out,
            &[a],
            Op::Slice {
                a,
                outer,
                inner,
                in_len,
                start,
                len,
            },
        ))
    }

    /// Unfolds `[B×T×C]` into the `[B·T'×K·C]` patch matrix of a 1-D convolution.
    /// Taps that fall outside the sequence read as zero.
    pub fn im2col(
        &mut self,
        a: Var,
        kernel: usize,
        stride: usize,
        pad_left: usize,
        time_out: usize,
    ) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        let [batch, time_in, channels] = shape[..] else {
            return Err(Error::Dimension(format!(
                "im2col expects [batch × time × channels], got {shape:?}"
            )));
        };
        if kernel == 0 || stride == 0 || time_out == 0 {
            return Err(Error::Contract("im2col: kernel, stride and output length must be positive".into()));
        }
        let geom = ConvGeometry {
            batch,
            time_in,
            time_out,
            channels,
            kernel,
            stride,
            pad_left,
        };
        let x = self.data(a);
        let width = kernel * channels;
        let mut out = vec![0.0; batch * time_out * width];
        for b in 0..batch {
            for t in 0..time_out {
                let row = &mut out[(b * time_out + t) * width..][..width];
                for k in 0..kernel {
                    if let Some(s) = geom.source(t, k) {
                        let src = &x[(b * time_in + s) * channels..][..channels];
                        row[k * channels..(k + 1) * channels].copy_from_slice(src);
                    }
                }
            }
        }
        Ok(self.derived(vec![batch * time_out, width], out, &[a], Op::Im2Col { a, geom }))
    }

    /// Zero-mean, unit-variance normalization of a 2-D tensor along `axis`
    /// using the biased variance plus `eps`.
    pub fn standardize(&mut self, a: Var, axis: NormAxis, eps: Real) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        let [rows, cols] = shape[..] else {
            return Err(Error::Dimension(format!(
                "standardize expects a 2-D tensor, got {shape:?}"
            )));
        };
        let x = self.data(a);
        let (groups, size) = match axis {
            NormAxis::Rows => (rows, cols),
            NormAxis::Columns => (cols, rows),
        };
        let at = |g: usize, i: usize| match axis {
            NormAxis::Rows => g * cols + i,
            NormAxis::Columns => i * cols + g,
        };
        let mut xhat = vec![0.0; x.len()];
        let mut inv_std = vec![0.0; groups];
        let nf = size as Real;
        for g in 0..groups {
            let mean = (0..size).map(|i| x[at(g, i)]).sum::<Real>() / nf;
            let var = (0..size).map(|i| (x[at(g, i)] - mean).powi(2)).sum::<Real>() / nf;
            let inv = 1.0 / (var + eps).sqrt();
            inv_std[g] = inv;
            for i in 0..size {
                xhat[at(g, i)] = (x[at(g, i)] - mean) * inv;
            }
        }
        let out = xhat.clone();
        Ok(self.derived(
            shape,
            out,
            &[a],
            Op::Standardize {
                a,
                axis,
                rows,
                cols,
                xhat,
                inv_std,
            },
        ))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.data(a).iter().sum();
        self.derived(vec![1], vec![s], &[a], Op::Sum { a })
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let d = self.data(a);
        let s = d.iter().sum::<Real>() / d.len() as Real;
        self.derived(vec![1], vec![s], &[a], Op::Mean { a })
    }

    /// Mean negative log-likelihood of `labels` under row-probabilities
    /// `probs: [B×K]`, with probabilities clamped below at `floor`.
    pub fn nll(&mut self, probs: Var, labels: &[usize], floor: Real) -> Result<Var> {
        let shape = self.shape(probs).to_vec();
        let [batch, classes] = shape[..] else {
            return Err(Error::Dimension(format!(
                "nll expects [batch × classes] probabilities, got {shape:?}"
            )));
        };
        if labels.len() != batch {
            return Err(Error::Contract(format!(
                "nll: {} labels for a batch of {batch}",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::Contract(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        let p = self.data(probs);
        let loss = -labels
            .iter()
            .enumerate()
            .map(|(i, &y)| p[i * classes + y].max(floor).ln())
            .sum::<Real>()
            / batch as Real;
        Ok(self.derived(
            vec![1],
            vec![loss],
            &[probs],
            Op::Nll {
                probs,
                labels: labels.to_vec(),
                floor,
            },
        ))
    }

    /// Reverse-mode sweep from a scalar `loss`. Gradients land in the grad
    /// slot of every recorded value that requires one.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let n = self.nodes[loss.0].value.len();
        if n != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        self.grads = (0..self.nodes.len()).map(|_| None).collect();
        for node in &mut self.nodes {
            node.value.grad = None;
        }
        if !self.nodes[loss.0].value.requires_grad {
            return Ok(());
        }
        self.grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            self.propagate(i, &g);
            self.nodes[i].value.grad = Some(g);
        }
        self.grads.clear();
        Ok(())
    }

    /// Accumulation buffer for `v`, or `None` when `v` needs no gradient.
    fn slot<'g>(
        grads: &'g mut [Option<Vec<Real>>],
        nodes: &[Node],
        v: Var,
    ) -> Option<&'g mut Vec<Real>> {
        let value = &nodes[v.0].value;
        if !value.requires_grad {
            return None;
        }
        Some(grads[v.0].get_or_insert_with(|| vec![0.0; value.len()]))
    }

    fn propagate(&mut self, i: usize, g: &[Real]) {
        let nodes = &self.nodes;
        let grads = &mut self.grads;
        let node = &nodes[i];
        let y = &node.value.data;
        match &node.op {
            Op::Leaf => {}
            &Op::MatMul {
                a,
                b,
                transpose_b,
                batch,
                m,
                k,
                n,
            } => {
                let ad = &nodes[a.0].value.data;
                let bd = &nodes[b.0].value.data;
                if let Some(ga) = Self::slot(grads, nodes, a) {
                    for bi in 0..batch {
                        let dc = View::row_major(&g[bi * m * n..(bi + 1) * m * n], n);
                        let bs = &bd[bi * k * n..(bi + 1) * k * n];
                        // dA = dC·Bᵀ, or dC·B when B was used transposed
                        let bv = if transpose_b {
                            View::row_major(bs, k)
                        } else {
                            View::transposed(bs, n)
                        };
                        gemm(m, n, k, dc, bv, 1.0, &mut ga[bi * m * k..(bi + 1) * m * k]);
                    }
                }
                if let Some(gb) = Self::slot(grads, nodes, b) {
                    for bi in 0..batch {
                        let gs = &g[bi * m * n..(bi + 1) * m * n];
                        let av = &ad[bi * m * k..(bi + 1) * m * k];
                        let out = &mut gb[bi * k * n..(bi + 1) * k * n];
                        if transpose_b {
                            // dB = dCᵀ·A, shape n×k
                            gemm(n, m, k, View::transposed(gs, n), View::row_major(av, k), 1.0, out);
                        } else {
                            // dB = Aᵀ·dC, shape k×n
                            gemm(k, m, n, View::transposed(av, k), View::row_major(gs, n), 1.0, out);
                        }
                    }
                }
            }
            &Op::Binary {
                a,
                b,
                kind,
                broadcast,
            } => {
                let ad = &nodes[a.0].value.data;
                let bd = &nodes[b.0].value.data;
                let w = bd.len();
                let bi = |j: usize| if broadcast { j % w } else { j };
                if let Some(ga) = Self::slot(grads, nodes, a) {
                    match kind {
                        BinaryKind::Add | BinaryKind::Sub => {
                            ga.iter_mut().zip(g).for_each(|(s, d)| *s += d)
                        }
                        BinaryKind::Mul => {
                            for (j, s) in ga.iter_mut().enumerate() {
                                *s += g[j] * bd[bi(j)];
                            }
                        }
                    }
                }
                if let Some(gb) = Self::slot(grads, nodes, b) {
                    for (j, &d) in g.iter().enumerate() {
                        gb[bi(j)] += match kind {
                            BinaryKind::Add => d,
                            BinaryKind::Sub => -d,
                            BinaryKind::Mul => d * ad[j],
                        };
                    }
                }
            }
            &Op::Scale { a, factor } => {
                if let Some(ga) = Self::slot(grads, nodes, a) {
                    ga.iter_mut().zip(g).for_each(|(s, d)| *s += d * factor);
                }
            }
            &Op::Act { a, kind } => {
                if let Some(ga) = Self::slot(grads, nodes, a) {
                    for ((s, &d), &yv) in ga.iter_mut().zip(g).zip(y) {
                        *s += d * match kind {
                            Activation::Relu => {
                                if yv > 0.0 {
                                    1.0
                                } else {
                                    0.0
                                }
                            }
                            Activation::Sigmoid => yv * (1.0 - yv),
                            Activation::Tanh => 1.0 - yv * yv,
                        };
                    }
                }
            }
            &Op::Softmax {
                a,
                outer,
                len,
                inner,
            } => {
                if let Some(ga) = Self::slot(grads, nodes, a) {
                    for o in 0..outer {
                        for ii in 0..inner {
                            let idx = |j: usize| (o * len + j) * inner + ii;
                            let dot: Real = (0..len).map(|j| g[idx(j)] * y[idx(j)]).sum();
                            for j in 0..len {
                                ga[idx(j)] += y[idx(j)] * (g[idx(j)] - dot);
                            }
                        }
                    }
                }
            }
            &Op::Reshape { a } => {
                if let Some(ga) = Self::slot(grads, nodes, a) {
                    ga.iter_mut().zip(g).for_each(|(s, d)| *s += d);
                }
            }
            Op::Concat {
                parts,
                outer,
                inner,
                total,
            } => {
                let mut offset = 0;
                for &(p, w) in parts {
                    if let Some(gp) = Self::slot(grads, nodes, p) {
                        for o in 0..*outer {
                            let src = &g[(o * total + offset) * inner..][..w * inner];
                            let dst = &mut gp[o * w * inner..][..w * inner];
                            dst.iter_mut().zip(src).for_each(|(s, d)| *s += d);
                        }
                    }
                    offset += w;
                }
            }
            &Op::Slice {
                a,
                outer,
                inner,
                in_len,
                start,
                len,
            } => {
                if let Some(ga) = Self::slot(grads, nodes, a) {
                    for o in 0..outer {
                        let src = &g[o * len * inner..][..len * inner];
                        let dst = &mut ga[(o * in_len + start) * inner..][..len * inner];
                        dst.iter_mut().zip(src).for_each(|(s, d)| *s += d);
                    }
                }
            }
            &Op::Im2Col { a, geom } => {
                if let Some(ga) = Self::slot(grads, nodes, a) {
                    let c = geom.channels;
                    let width = geom.kernel * c;
                    for b in 0..geom.batch {
                        for t in 0..geom.time_out {
                            let row = &g[(b * geom.time_out + t) * width..][..width];
                            for k in 0..geom.kernel {
                                if let Some(s) = geom.source(t, k) {
                                    let dst = &mut ga[(b * geom.time_in + s) * c..][..c];
                                    dst.iter_mut()
                                        .zip(&row[k * c..(k + 1) * c])
                                        .for_each(|(s, d)| *s += d);
                                }
                            }
                        }
                    }
                }
            }
            Op::Standardize {
                a,
                axis,
                rows,
                cols,
                xhat,
                inv_std,
            } => {
                if let Some(ga) = Self::slot(grads, nodes, *a) {
                    let (groups, size) = match axis {
                        NormAxis::Rows => (*rows, *cols),
                        NormAxis::Columns => (*cols, *rows),
                    };
                    let at = |gi: usize, j: usize| match axis {
                        NormAxis::Rows => gi * cols + j,
                        NormAxis::Columns => j * cols + gi,
                    };
                    let nf = size as Real;
                    for gi in 0..groups {
                        let mut mean_g = 0.0;
                        let mut mean_gx = 0.0;
                        for j in 0..size {
                            let ix = at(gi, j);
                            mean_g += g[ix];
                            mean_gx += g[ix] * xhat[ix];
                        }
                        mean_g /= nf;
                        mean_gx /= nf;
                        for j in 0..size {
                            let ix = at(gi, j);
                            ga[ix] += inv_std[gi] * (g[ix] - mean_g - xhat[ix] * mean_gx);
                        }
                    }
                }
            }
            &Op::Sum { a } => {
                if let Some(ga) = Self::slot(grads, nodes, a) {
                    ga.iter_mut().for_each(|s| *s += g[0]);
                }
            }
            &Op::Mean { a } => {
                if let Some(ga) = Self::slot(grads, nodes, a) {
                    let d = g[0] / ga.len() as Real;
                    ga.iter_mut().for_each(|s| *s += d);
                }
            }
            Op::Nll {
                probs,
                labels,
                floor,
            } => {
                let p = &nodes[probs.0].value.data;
                if let Some(gp) = Self::slot(grads, nodes, *probs) {
                    let batch = labels.len();
                    let classes = p.len() / batch;
                    for (r, &lbl) in labels.iter().enumerate() {
                        let ix = r * classes + lbl;
                        if p[ix] > *floor {
                            gp[ix] -= g[0] / (batch as Real * p[ix]);
                        }
                    }
                }
            }
        }
    }
}

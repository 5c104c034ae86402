//! Define-by-run reverse-mode autodiff over a fixed op vocabulary:
//! matmul, bias add, ReLU, softmax, layer norm, mean/max/select pooling,
//! concatenation, fused multi-head scaled dot-product attention, gather,
//! and Huber/MSE losses.

use crate::params::ParamSet;
use crate::tensor::{axis_lanes, Elem, Tensor};
use rayon::prelude::*;

const LN_EPS: f64 = 1e-5;
/// Below this many multiply-adds a matmul stays single-threaded.
const PAR_FLOPS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

enum Op<E> {
    Input,
    Param(String),
    MatMul(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Add(NodeId, NodeId),
    Relu(NodeId),
    Softmax(NodeId, usize),
    LayerNorm {
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        mean: Vec<E>,
        rstd: Vec<E>,
    },
    Mean(NodeId, usize),
    Max(NodeId, usize, Vec<usize>),
    Select(NodeId, usize, usize),
    Concat(Vec<NodeId>, usize),
    Attention {
        q: NodeId,
        k: NodeId,
        v: NodeId,
        heads: usize,
        probs: Vec<E>,
    },
    Gather(NodeId, Vec<usize>),
    Huber {
        pred: NodeId,
        target: Tensor<E>,
        delta: f64,
    },
    Mse {
        pred: NodeId,
        target: Tensor<E>,
    },
}

struct Node<E> {
    value: Tensor<E>,
    op: Op<E>,
}

/// One forward tape. Values are computed eagerly; `backward` may run once.
pub struct Graph<E> {
    nodes: Vec<Node<E>>,
    backward_done: bool,
}

impl<E: Elem> Default for Graph<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E: Elem> Graph<E> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            backward_done: false,
        }
    }

    fn push(&mut self, value: Tensor<E>, op: Op<E>, context: &str) -> NodeId {
        value.assert_finite(context);
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor<E> {
        &self.nodes[id.0].value
    }

    pub fn input(&mut self, t: Tensor<E>) -> NodeId {
        self.push(t, Op::Input, "input")
    }

    /// Register a parameter leaf; gradients flow back into `params` by name.
    pub fn param(&mut self, params: &ParamSet<E>, name: &str) -> NodeId {
        let t = params.value(name).clone();
        self.push(t, Op::Param(name.to_string()), "param")
    }

    /// a: [..., k] (leading axes flattened to rows), b: [k, n].
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let out = matmul_forward(av, bv);
        self.push(out, Op::MatMul(a, b), "matmul")
    }

    /// x: [..., n] + bias [n].
    pub fn add_bias(&mut self, x: NodeId, b: NodeId) -> NodeId {
        let (xv, bv) = (&self.nodes[x.0].value, &self.nodes[b.0].value);
        let n = xv.last_dim();
        assert_eq!(bv.shape(), [n], "bias shape mismatch");
        let mut out = xv.clone();
        for row in out.data_mut().chunks_exact_mut(n) {
            for (o, &bb) in row.iter_mut().zip(bv.data()) {
                *o += bb;
            }
        }
        self.push(out, Op::AddBias(x, b), "add_bias")
    }

    /// Elementwise sum of same-shape tensors.
    pub fn add(&mut self, x: NodeId, y: NodeId) -> NodeId {
        let (xv, yv) = (&self.nodes[x.0].value, &self.nodes[y.0].value);
        assert_eq!(xv.shape(), yv.shape(), "add shape mismatch");
        let mut out = xv.clone();
        for (o, &v) in out.data_mut().iter_mut().zip(yv.data()) {
            *o += v;
        }
        self.push(out, Op::Add(x, y), "add")
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let mut out = self.nodes[x.0].value.clone();
        for v in out.data_mut() {
            if *v < E::zero() {
                *v = E::zero();
            }
        }
        self.push(out, Op::Relu(x), "relu")
    }

    pub fn softmax(&mut self, x: NodeId, axis: usize) -> NodeId {
        let xv = &self.nodes[x.0].value;
        let mut out = xv.clone();
        let (outer, len, inner) = axis_lanes(xv.shape(), axis);
        let data = out.data_mut();
        for o in 0..outer {
            for i in 0..inner {
                let base = o * len * inner + i;
                softmax_lane(data, base, len, inner);
            }
        }
        self.push(out, Op::Softmax(x, axis), "softmax")
    }

    /// Normalization over the last axis with learnable affine.
    pub fn layer_norm(&mut self, x: NodeId, gamma: NodeId, beta: NodeId) -> NodeId {
        let xv = &self.nodes[x.0].value;
        let gv = &self.nodes[gamma.0].value;
        let bv = &self.nodes[beta.0].value;
        let n = xv.last_dim();
        assert_eq!(gv.shape(), [n]);
        assert_eq!(bv.shape(), [n]);
        let rows = xv.leading();
        let mut out = Tensor::zeros(xv.shape());
        let mut means = Vec::with_capacity(rows);
        let mut rstds = Vec::with_capacity(rows);
        let inv_n = E::from_f64(1.0 / n as f64);
        let eps = E::from_f64(LN_EPS);
        for r in 0..rows {
            let row = xv.row(r);
            let mut mean = E::zero();
            for &v in row {
                mean += v;
            }
            mean *= inv_n;
            let mut var = E::zero();
            for &v in row {
                let d = v - mean;
                var += d * d;
            }
            var *= inv_n;
            let rstd = (var + eps).sqrt().recip();
            let orow = &mut out.data_mut()[r * n..(r + 1) * n];
            for ((o, &v), (&g, &b)) in orow
                .iter_mut()
                .zip(row)
                .zip(gv.data().iter().zip(bv.data()))
            {
                *o = (v - mean) * rstd * g + b;
            }
            means.push(mean);
            rstds.push(rstd);
        }
        self.push(
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                mean: means,
                rstd: rstds,
            },
            "layer_norm",
        )
    }

    /// Average over one axis, dropping it.
    pub fn mean(&mut self, x: NodeId, axis: usize) -> NodeId {
        let xv = &self.nodes[x.0].value;
        let (outer, len, inner) = axis_lanes(xv.shape(), axis);
        let mut shape = xv.shape().to_vec();
        shape.remove(axis);
        let mut out = Tensor::zeros(&shape);
        let scale = E::from_f64(1.0 / len as f64);
        for o in 0..outer {
            for j in 0..len {
                let src = &xv.data()[(o * len + j) * inner..(o * len + j + 1) * inner];
                let dst = &mut out.data_mut()[o * inner..(o + 1) * inner];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += s * scale;
                }
            }
        }
        self.push(out, Op::Mean(x, axis), "mean")
    }

    /// Max over one axis, dropping it.
    pub fn max_axis(&mut self, x: NodeId, axis: usize) -> NodeId {
        let xv = &self.nodes[x.0].value;
        let (outer, len, inner) = axis_lanes(xv.shape(), axis);
        let mut shape = xv.shape().to_vec();
        shape.remove(axis);
        let mut out = Tensor::zeros(&shape);
        let mut argmax = vec![0usize; outer * inner];
        for o in 0..outer {
            for i in 0..inner {
                let mut best = E::neg_infinity();
                let mut best_j = 0;
                for j in 0..len {
                    let v = xv.data()[(o * len + j) * inner + i];
                    if v > best {
                        best = v;
                        best_j = j;
                    }
                }
                out.data_mut()[o * inner + i] = best;
                argmax[o * inner + i] = best_j;
            }
        }
        self.push(out, Op::Max(x, axis, argmax), "max_axis")
    }

    /// Take one index along an axis, dropping it.
    pub fn select(&mut self, x: NodeId, axis: usize, index: usize) -> NodeId {
        let xv = &self.nodes[x.0].value;
        let (outer, len, inner) = axis_lanes(xv.shape(), axis);
        assert!(index < len);
        let mut shape = xv.shape().to_vec();
        shape.remove(axis);
        let mut out = Tensor::zeros(&shape);
        for o in 0..outer {
            let src = &xv.data()[(o * len + index) * inner..(o * len + index + 1) * inner];
            out.data_mut()[o * inner..(o + 1) * inner].copy_from_slice(src);
        }
        self.push(out, Op::Select(x, axis, index), "select")
    }

    /// Concatenate along the last axis.
    pub fn concat(&mut self, xs: &[NodeId], axis: usize) -> NodeId {
        assert!(!xs.is_empty());
        let rank = self.nodes[xs[0].0].value.shape().len();
        assert_eq!(axis, rank - 1, "concat is implemented for the last axis");
        let rows = self.nodes[xs[0].0].value.leading();
        let mut total = 0;
        for &x in xs {
            let v = &self.nodes[x.0].value;
            assert_eq!(v.leading(), rows, "concat row mismatch");
            total += v.last_dim();
        }
        let mut shape = self.nodes[xs[0].0].value.shape().to_vec();
        *shape.last_mut().unwrap() = total;
        let mut out = Tensor::zeros(&shape);
        for r in 0..rows {
            let dst = &mut out.data_mut()[r * total..(r + 1) * total];
            let mut off = 0;
            for &x in xs {
                let v = &self.nodes[x.0].value;
                let d = v.last_dim();
                dst[off..off + d].copy_from_slice(v.row(r));
                off += d;
            }
        }
        self.push(out, Op::Concat(xs.to_vec(), axis), "concat")
    }

    /// Fused multi-head scaled dot-product attention over already-projected
    /// q/k/v of shape [B, T, D]. Heads are contiguous column blocks of
    /// width D/heads; outputs keep the same layout (concatenated heads).
    pub fn scaled_dot_attention(&mut self, q: NodeId, k: NodeId, v: NodeId, heads: usize) -> NodeId {
        let (qv, kv, vv) = (
            &self.nodes[q.0].value,
            &self.nodes[k.0].value,
            &self.nodes[v.0].value,
        );
        assert_eq!(qv.shape(), kv.shape());
        assert_eq!(qv.shape(), vv.shape());
        assert_eq!(qv.shape().len(), 3, "attention expects [B, T, D]");
        let (b, t, d) = (qv.shape()[0], qv.shape()[1], qv.shape()[2]);
        assert_eq!(d % heads, 0, "feature dim {d} not divisible by {heads} heads");
        let dh = d / heads;
        let scale = E::from_f64(1.0 / (dh as f64).sqrt());
        let mut out = Tensor::zeros(qv.shape());
        let mut probs = vec![E::zero(); b * heads * t * t];
        for bi in 0..b {
            for h in 0..heads {
                let col = h * dh;
                let p = &mut probs[(bi * heads + h) * t * t..(bi * heads + h + 1) * t * t];
                for t1 in 0..t {
                    let qrow = &qv.data()[(bi * t + t1) * d + col..(bi * t + t1) * d + col + dh];
                    for t2 in 0..t {
                        let krow = &kv.data()[(bi * t + t2) * d + col..(bi * t + t2) * d + col + dh];
                        let mut s = E::zero();
                        for (qq, kk) in qrow.iter().zip(krow) {
                            s += *qq * *kk;
                        }
                        p[t1 * t + t2] = s * scale;
                    }
                    softmax_lane(p, t1 * t, t, 1);
                }
                for t1 in 0..t {
                    let dst_base = (bi * t + t1) * d + col;
                    for t2 in 0..t {
                        let w = p[t1 * t + t2];
                        let vrow = &vv.data()[(bi * t + t2) * d + col..(bi * t + t2) * d + col + dh];
                        let dst = &mut out.data_mut()[dst_base..dst_base + dh];
                        for (o, &vvv) in dst.iter_mut().zip(vrow) {
                            *o += w * vvv;
                        }
                    }
                }
            }
        }
        self.push(
            out,
            Op::Attention {
                q,
                k,
                v,
                heads,
                probs,
            },
            "scaled_dot_attention",
        )
    }

    /// x: [B, A], indices: one column per row -> [B].
    pub fn gather(&mut self, x: NodeId, indices: &[usize]) -> NodeId {
        let xv = &self.nodes[x.0].value;
        assert_eq!(xv.shape().len(), 2);
        let (b, a) = (xv.shape()[0], xv.shape()[1]);
        assert_eq!(indices.len(), b);
        let mut out = Tensor::zeros(&[b]);
        for (r, &ix) in indices.iter().enumerate() {
            assert!(ix < a, "gather index {ix} out of {a}");
            out.data_mut()[r] = xv.data()[r * a + ix];
        }
        self.push(out, Op::Gather(x, indices.to_vec()), "gather")
    }

    /// Mean Huber loss between `pred` and a constant target of equal shape.
    pub fn huber_loss(&mut self, pred: NodeId, target: Tensor<E>, delta: f64) -> NodeId {
        let pv = &self.nodes[pred.0].value;
        assert_eq!(pv.shape(), target.shape());
        let d = E::from_f64(delta);
        let half = E::from_f64(0.5);
        let mut acc = E::zero();
        for (&p, &t) in pv.data().iter().zip(target.data()) {
            let e = p - t;
            let ae = e.abs();
            acc += if ae <= d {
                half * e * e
            } else {
                d * (ae - half * d)
            };
        }
        let loss = acc / E::from_f64(pv.numel() as f64);
        self.push(
            Tensor::scalar(loss),
            Op::Huber {
                pred,
                target,
                delta,
            },
            "huber_loss",
        )
    }

    /// Mean squared error against a constant target.
    pub fn mse_loss(&mut self, pred: NodeId, target: Tensor<E>) -> NodeId {
        let pv = &self.nodes[pred.0].value;
        assert_eq!(pv.shape(), target.shape());
        let mut acc = E::zero();
        for (&p, &t) in pv.data().iter().zip(target.data()) {
            let e = p - t;
            acc += e * e;
        }
        let loss = acc / E::from_f64(pv.numel() as f64);
        self.push(Tensor::scalar(loss), Op::Mse { pred, target }, "mse_loss")
    }

    /// Reverse sweep from a scalar loss; accumulates parameter gradients
    /// into `params`. A second call without a fresh forward is a contract
    /// violation.
    pub fn backward(&mut self, loss: NodeId, params: &mut ParamSet<E>) {
        assert!(
            !self.backward_done,
            "backward called twice on the same graph"
        );
        self.backward_done = true;
        assert_eq!(
            self.nodes[loss.0].value.numel(),
            1,
            "backward requires a scalar loss at the graph root"
        );
        let mut grads: Vec<Option<Tensor<E>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::from_vec(
            self.nodes[loss.0].value.shape(),
            vec![E::one()],
        ));
        for idx in (0..self.nodes.len()).rev() {
            let Some(gout) = grads[idx].take() else {
                continue;
            };
            match &self.nodes[idx].op {
                Op::Input => {}
                Op::Param(name) => params.accumulate_grad(name, &gout),
                Op::MatMul(a, b) => {
                    let (da, db) = matmul_backward(
                        &self.nodes[a.0].value,
                        &self.nodes[b.0].value,
                        &gout,
                    );
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::AddBias(x, b) => {
                    let n = self.nodes[b.0].value.last_dim();
                    let mut db = Tensor::zeros(&[n]);
                    for row in gout.data().chunks_exact(n) {
                        for (d, &g) in db.data_mut().iter_mut().zip(row) {
                            *d += g;
                        }
                    }
                    accumulate(&mut grads, *b, db);
                    accumulate(&mut grads, *x, gout);
                }
                Op::Add(x, y) => {
                    accumulate(&mut grads, *x, gout.clone());
                    accumulate(&mut grads, *y, gout);
                }
                Op::Relu(x) => {
                    let mut dx = gout;
                    for (g, &v) in dx.data_mut().iter_mut().zip(self.nodes[x.0].value.data()) {
                        if v <= E::zero() {
                            *g = E::zero();
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::Softmax(x, axis) => {
                    let p = &self.nodes[idx].value;
                    let (outer, len, inner) = axis_lanes(p.shape(), *axis);
                    let mut dx = Tensor::zeros(p.shape());
                    for o in 0..outer {
                        for i in 0..inner {
                            let base = o * len * inner + i;
                            let mut dot = E::zero();
                            for j in 0..len {
                                let ix = base + j * inner;
                                dot += gout.data()[ix] * p.data()[ix];
                            }
                            for j in 0..len {
                                let ix = base + j * inner;
                                dx.data_mut()[ix] = p.data()[ix] * (gout.data()[ix] - dot);
                            }
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    mean,
                    rstd,
                } => {
                    let xv = &self.nodes[x.0].value;
                    let gv = &self.nodes[gamma.0].value;
                    let n = xv.last_dim();
                    let rows = xv.leading();
                    let inv_n = E::from_f64(1.0 / n as f64);
                    let mut dx = Tensor::zeros(xv.shape());
                    let mut dgamma = Tensor::zeros(&[n]);
                    let mut dbeta = Tensor::zeros(&[n]);
                    for r in 0..rows {
                        let xrow = xv.row(r);
                        let grow = &gout.data()[r * n..(r + 1) * n];
                        let (m, rs) = (mean[r], rstd[r]);
                        // dxhat. Then dx = rstd*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat)).
                        let mut sum_dxhat = E::zero();
                        let mut sum_dxhat_xhat = E::zero();
                        for j in 0..n {
                            let xhat = (xrow[j] - m) * rs;
                            let dxhat = grow[j] * gv.data()[j];
                            sum_dxhat += dxhat;
                            sum_dxhat_xhat += dxhat * xhat;
                            dgamma.data_mut()[j] += grow[j] * xhat;
                            dbeta.data_mut()[j] += grow[j];
                        }
                        let mean_dxhat = sum_dxhat * inv_n;
                        let mean_dxhat_xhat = sum_dxhat_xhat * inv_n;
                        let drow = &mut dx.data_mut()[r * n..(r + 1) * n];
                        for j in 0..n {
                            let xhat = (xrow[j] - m) * rs;
                            let dxhat = grow[j] * gv.data()[j];
                            drow[j] = rs * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                    accumulate(&mut grads, *gamma, dgamma);
                    accumulate(&mut grads, *beta, dbeta);
                }
                Op::Mean(x, axis) => {
                    let xv = &self.nodes[x.0].value;
                    let (outer, len, inner) = axis_lanes(xv.shape(), *axis);
                    let scale = E::from_f64(1.0 / len as f64);
                    let mut dx = Tensor::zeros(xv.shape());
                    for o in 0..outer {
                        for j in 0..len {
                            let dst =
                                &mut dx.data_mut()[(o * len + j) * inner..(o * len + j + 1) * inner];
                            let src = &gout.data()[o * inner..(o + 1) * inner];
                            for (d, &g) in dst.iter_mut().zip(src) {
                                *d = g * scale;
                            }
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::Max(x, axis, argmax) => {
                    let xv = &self.nodes[x.0].value;
                    let (outer, len, inner) = axis_lanes(xv.shape(), *axis);
                    let mut dx = Tensor::zeros(xv.shape());
                    for o in 0..outer {
                        for i in 0..inner {
                            let j = argmax[o * inner + i];
                            dx.data_mut()[(o * len + j) * inner + i] = gout.data()[o * inner + i];
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::Select(x, axis, index) => {
                    let xv = &self.nodes[x.0].value;
                    let (outer, len, inner) = axis_lanes(xv.shape(), *axis);
                    let mut dx = Tensor::zeros(xv.shape());
                    for o in 0..outer {
                        let dst = &mut dx.data_mut()
                            [(o * len + index) * inner..(o * len + index + 1) * inner];
                        dst.copy_from_slice(&gout.data()[o * inner..(o + 1) * inner]);
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::Concat(xs, _) => {
                    let xs = xs.clone();
                    let total = self.nodes[idx].value.last_dim();
                    let rows = self.nodes[idx].value.leading();
                    let mut off = 0;
                    for &xn in &xs {
                        let v = &self.nodes[xn.0].value;
                        let d = v.last_dim();
                        let mut dx = Tensor::zeros(v.shape());
                        for r in 0..rows {
                            dx.data_mut()[r * d..(r + 1) * d]
                                .copy_from_slice(&gout.data()[r * total + off..r * total + off + d]);
                        }
                        off += d;
                        accumulate(&mut grads, xn, dx);
                    }
                }
                Op::Attention {
                    q,
                    k,
                    v,
                    heads,
                    probs,
                } => {
                    let (dq, dk, dv) = attention_backward(
                        &self.nodes[q.0].value,
                        &self.nodes[k.0].value,
                        &self.nodes[v.0].value,
                        probs,
                        *heads,
                        &gout,
                    );
                    accumulate(&mut grads, *q, dq);
                    accumulate(&mut grads, *k, dk);
                    accumulate(&mut grads, *v, dv);
                }
                Op::Gather(x, indices) => {
                    let xv = &self.nodes[x.0].value;
                    let a = xv.shape()[1];
                    let mut dx = Tensor::zeros(xv.shape());
                    for (r, &ix) in indices.iter().enumerate() {
                        dx.data_mut()[r * a + ix] = gout.data()[r];
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::Huber {
                    pred,
                    target,
                    delta,
                } => {
                    let pv = &self.nodes[pred.0].value;
                    let d = E::from_f64(*delta);
                    let scale = gout.item() / E::from_f64(pv.numel() as f64);
                    let mut dp = Tensor::zeros(pv.shape());
                    for ((g, &p), &t) in dp
                        .data_mut()
                        .iter_mut()
                        .zip(pv.data())
                        .zip(target.data())
                    {
                        let e = p - t;
                        *g = scale * if e.abs() <= d { e } else { d * e.signum() };
                    }
                    accumulate(&mut grads, *pred, dp);
                }
                Op::Mse { pred, target } => {
                    let pv = &self.nodes[pred.0].value;
                    let two = E::from_f64(2.0);
                    let scale = gout.item() / E::from_f64(pv.numel() as f64);
                    let mut dp = Tensor::zeros(pv.shape());
                    for ((g, &p), &t) in dp
                        .data_mut()
                        .iter_mut()
                        .zip(pv.data())
                        .zip(target.data())
                    {
                        *g = scale * two * (p - t);
                    }
                    accumulate(&mut grads, *pred, dp);
                }
            }
        }
    }
}

fn accumulate<E: Elem>(grads: &mut [Option<Tensor<E>>], id: NodeId, g: Tensor<E>) {
    match &mut grads[id.0] {
        Some(existing) => {
            for (e, &v) in existing.data_mut().iter_mut().zip(g.data()) {
                *e += v;
            }
        }
        slot => *slot = Some(g),
    }
}

fn softmax_lane<E: Elem>(data: &mut [E], base: usize, len: usize, stride: usize) {
    let mut max = E::neg_infinity();
    for j in 0..len {
        let v = data[base + j * stride];
        if v > max {
            max = v;
        }
    }
    let mut sum = E::zero();
    for j in 0..len {
        let e = (data[base + j * stride] - max).exp();
        data[base + j * stride] = e;
        sum += e;
    }
    let inv = sum.recip();
    for j in 0..len {
        data[base + j * stride] *= inv;
    }
}

fn matmul_forward<E: Elem>(a: &Tensor<E>, b: &Tensor<E>) -> Tensor<E> {
    let k = a.last_dim();
    assert_eq!(b.shape().len(), 2, "matmul rhs must be 2-D");
    assert_eq!(b.shape()[0], k, "matmul inner dim mismatch");
    let n = b.shape()[1];
    let m = a.leading();
    let mut shape = a.shape().to_vec();
    *shape.last_mut().unwrap() = n;
    let mut out = vec![E::zero(); m * n];
    let kernel = |i: usize, row: &mut [E]| {
        let arow = &a.data()[i * k..(i + 1) * k];
        for (kk, &aik) in arow.iter().enumerate() {
            let brow = &b.data()[kk * n..(kk + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    };
    if m * n * k >= PAR_FLOPS {
        out.par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| kernel(i, row));
    } else {
        for (i, row) in out.chunks_exact_mut(n).enumerate() {
            kernel(i, row);
        }
    }
    Tensor::from_vec(&shape, out)
}

fn matmul_backward<E: Elem>(
    a: &Tensor<E>,
    b: &Tensor<E>,
    gout: &Tensor<E>,
) -> (Tensor<E>, Tensor<E>) {
    let k = a.last_dim();
    let n = b.shape()[1];
    let m = a.leading();
    // dA[i, kk] = gout[i, :] . b[kk, :]
    let mut da = vec![E::zero(); m * k];
    let da_kernel = |i: usize, row: &mut [E]| {
        let grow = &gout.data()[i * n..(i + 1) * n];
        for (kk, o) in row.iter_mut().enumerate() {
            let brow = &b.data()[kk * n..(kk + 1) * n];
            let mut s = E::zero();
            for (g, bv) in grow.iter().zip(brow) {
                s += *g * *bv;
            }
            *o = s;
        }
    };
    if m * n * k >= PAR_FLOPS {
        da.par_chunks_mut(k)
            .enumerate()
            .for_each(|(i, row)| da_kernel(i, row));
    } else {
        for (i, row) in da.chunks_exact_mut(k).enumerate() {
            da_kernel(i, row);
        }
    }
    // dB[kk, :] = sum_i a[i, kk] * gout[i, :]
    let mut db = vec![E::zero(); k * n];
    let db_kernel = |kk: usize, row: &mut [E]| {
        for i in 0..m {
            let aik = a.data()[i * k + kk];
            let grow = &gout.data()[i * n..(i + 1) * n];
            for (o, &g) in row.iter_mut().zip(grow) {
                *o += aik * g;
            }
        }
    };
    if m * n * k >= PAR_FLOPS {
        db.par_chunks_mut(n)
            .enumerate()
            .for_each(|(kk, row)| db_kernel(kk, row));
    } else {
        for (kk, row) in db.chunks_exact_mut(n).enumerate() {
            db_kernel(kk, row);
        }
    }
    let mut da_shape = a.shape().to_vec();
    *da_shape.last_mut().unwrap() = k;
    (
        Tensor::from_vec(&da_shape, da),
        Tensor::from_vec(b.shape(), db),
    )
}

fn attention_backward<E: Elem>(
    q: &Tensor<E>,
    k: &Tensor<E>,
    v: &Tensor<E>,
    probs: &[E],
    heads: usize,
    gout: &Tensor<E>,
) -> (Tensor<E>, Tensor<E>, Tensor<E>) {
    let (b, t, d) = (q.shape()[0], q.shape()[1], q.shape()[2]);
    let dh = d / heads;
    let scale = E::from_f64(1.0 / (dh as f64).sqrt());
    let mut dq = Tensor::zeros(q.shape());
    let mut dk = Tensor::zeros(k.shape());
    let mut dv = Tensor::zeros(v.shape());
    let mut dp = vec![E::zero(); t * t];
    let mut ds = vec![E::zero(); t * t];
    for bi in 0..b {
        for h in 0..heads {
            let col = h * dh;
            let p = &probs[(bi * heads + h) * t * t..(bi * heads + h + 1) * t * t];
            // dV += P^T dO ; dP = dO V^T
            for t1 in 0..t {
                let go = &gout.data()[(bi * t + t1) * d + col..(bi * t + t1) * d + col + dh];
                for t2 in 0..t {
                    let w = p[t1 * t + t2];
                    let dvrow =
                        &mut dv.data_mut()[(bi * t + t2) * d + col..(bi * t + t2) * d + col + dh];
                    for (o, &g) in dvrow.iter_mut().zip(go) {
                        *o += w * g;
                    }
                    let vrow = &v.data()[(bi * t + t2) * d + col..(bi * t + t2) * d + col + dh];
                    let mut s = E::zero();
                    for (g, vv) in go.iter().zip(vrow) {
                        s += *g * *vv;
                    }
                    dp[t1 * t + t2] = s;
                }
            }
            // dS = P o (dP - rowsum(dP o P))
            for t1 in 0..t {
                let mut dot = E::zero();
                for t2 in 0..t {
                    dot += dp[t1 * t + t2] * p[t1 * t + t2];
                }
                for t2 in 0..t {
                    ds[t1 * t + t2] = p[t1 * t + t2] * (dp[t1 * t + t2] - dot);
                }
            }
            // dQ = dS K * scale ; dK = dS^T Q * scale
            for t1 in 0..t {
                let dqrow =
                    &mut dq.data_mut()[(bi * t + t1) * d + col..(bi * t + t1) * d + col + dh];
                for t2 in 0..t {
                    let w = ds[t1 * t + t2] * scale;
                    let krow = &k.data()[(bi * t + t2) * d + col..(bi * t + t2) * d + col + dh];
                    for (o, &kk) in dqrow.iter_mut().zip(krow) {
                        *o += w * kk;
                    }
                }
            }
            for t2 in 0..t {
                let dkrow =
                    &mut dk.data_mut()[(bi * t + t2) * d + col..(bi * t + t2) * d + col + dh];
                for t1 in 0..t {
                    let w = ds[t1 * t + t2] * scale;
                    let qrow = &q.data()[(bi * t + t1) * d + col..(bi * t + t1) * d + col + dh];
                    for (o, &qq) in dkrow.iter_mut().zip(qrow) {
                        *o += w * qq;
                    }
                }
            }
        }
    }
    (dq, dk, dv)
}

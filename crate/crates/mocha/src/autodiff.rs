//! A small reverse-mode tape over dense f64 tensors.
//!
//! Values are computed eagerly as the graph is built; `backward` replays the
//! tape in reverse, accumulating gradients additively so a value used twice
//! receives both contributions. The op set is exactly what the attention
//! pipelines and the gated recurrent cells need — including the scan
//! primitives (cumulative sums/products, moving window sums) that the
//! expected attention distributions are made of.

use crate::tensor::{dot, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Constant,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    ScaleConst(usize, f64),
    Tanh(usize),
    Logistic(usize),
    Exp(usize),
    ClampMin(usize, f64),
    CumsumInc(usize),
    CumprodExc(usize),
    CumprodInc(usize),
    Reverse(usize),
    MovingSum { x: usize, back: usize, fwd: usize },
    Slice { x: usize, start: usize, len: usize },
    Pad { x: usize, front: usize },
    BroadcastMul { x: usize, s: usize },
    BroadcastAdd { x: usize, s: usize },
    Dot(usize, usize),
    Sum(usize),
    Normalize(usize),
    MatVec { m: usize, x: usize },
    MatTVec { m: usize, x: usize },
    MatMatT { a: usize, b: usize },
    AddRowBroadcast { m: usize, v: usize },
    StackRows(Vec<usize>),
    EmbedRow { table: usize, index: usize },
    SoftmaxCrossEntropy { logits: usize, target: usize },
}

struct Node {
    op: Op,
    value: Tensor,
}

/// Gradients keyed by tape variable, produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    /// Gradient-tracked input (a parameter or anything differentiated with
    /// respect to).
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(Op::Leaf, value)
    }

    /// Input treated as fixed; no gradient is reported for it.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Op::Constant, value)
    }

    pub fn scalar_constant(&mut self, v: f64) -> Var {
        self.constant(Tensor::scalar(v))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.zip(a, b, |x, y| x + y);
        self.push(Op::Add(a.0, b.0), value)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = self.zip(a, b, |x, y| x - y);
        self.push(Op::Sub(a.0, b.0), value)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.zip(a, b, |x, y| x * y);
        self.push(Op::Mul(a.0, b.0), value)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let value = self.zip(a, b, |x, y| x / y);
        self.push(Op::Div(a.0, b.0), value)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.map(a, |x| c * x);
        self.push(Op::ScaleConst(a.0, c), value)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.map(a, f64::tanh);
        self.push(Op::Tanh(a.0), value)
    }

    pub fn logistic(&mut self, a: Var) -> Var {
        let value = self.map(a, crate::attention::logistic);
        self.push(Op::Logistic(a.0), value)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let value = self.map(a, f64::exp);
        self.push(Op::Exp(a.0), value)
    }

    /// max(x, lo) elementwise; clamped coordinates receive zero gradient.
    pub fn clamp_min(&mut self, a: Var, lo: f64) -> Var {
        let value = self.map(a, |x| x.max(lo));
        self.push(Op::ClampMin(a.0, lo), value)
    }

    pub fn cumsum_inclusive(&mut self, a: Var) -> Var {
        let x = self.vector(a);
        let value = Tensor::vector(crate::scan::cumsum_inclusive(x));
        self.push(Op::CumsumInc(a.0), value)
    }

    pub fn cumprod_exclusive(&mut self, a: Var) -> Var {
        let x = self.vector(a);
        let value = Tensor::vector(crate::scan::cumprod_exclusive(x));
        self.push(Op::CumprodExc(a.0), value)
    }

    pub fn cumprod_inclusive(&mut self, a: Var) -> Var {
        let x = self.vector(a);
        let mut acc = 1.0;
        let value = Tensor::vector(
            x.iter()
                .map(|v| {
                    acc *= v;
                    acc
                })
                .collect(),
        );
        self.push(Op::CumprodInc(a.0), value)
    }

    pub fn reverse(&mut self, a: Var) -> Var {
        let x = self.vector(a);
        let value = Tensor::vector(x.iter().rev().cloned().collect());
        self.push(Op::Reverse(a.0), value)
    }

    pub fn movingsum(&mut self, a: Var, back: usize, fwd: usize) -> Var {
        let x = self.vector(a);
        let value = Tensor::vector(crate::scan::movingsum(x, back, fwd));
        self.push(Op::MovingSum { x: a.0, back, fwd }, value)
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Var {
        let x = self.vector(a);
        assert!(start + len <= x.len(), "slice out of range");
        let value = Tensor::vector(x[start..start + len].to_vec());
        self.push(Op::Slice { x: a.0, start, len }, value)
    }

    /// Zero padding on both ends of a vector.
    pub fn pad(&mut self, a: Var, front: usize, back: usize) -> Var {
        let x = self.vector(a);
        let mut out = vec![0.0; front + x.len() + back];
        out[front..front + x.len()].copy_from_slice(x);
        let value = Tensor::vector(out);
        self.push(Op::Pad { x: a.0, front }, value)
    }

    /// vector * scalar variable.
    pub fn broadcast_mul(&mut self, a: Var, s: Var) -> Var {
        let c = self.value(s).item();
        let value = self.map(a, |x| x * c);
        self.push(Op::BroadcastMul { x: a.0, s: s.0 }, value)
    }

    /// vector + scalar variable.
    pub fn broadcast_add(&mut self, a: Var, s: Var) -> Var {
        let c = self.value(s).item();
        let value = self.map(a, |x| x + c);
        self.push(Op::BroadcastAdd { x: a.0, s: s.0 }, value)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let value = Tensor::scalar(dot(self.vector(a), self.vector(b)));
        self.push(Op::Dot(a.0, b.0), value)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Tensor::scalar(self.value(a).data().iter().sum());
        self.push(Op::Sum(a.0), value)
    }

    /// x / ||x|| for a vector x.
    pub fn normalize(&mut self, a: Var) -> Var {
        let x = self.vector(a);
        let n = dot(x, x).sqrt();
        assert!(n > 0.0, "cannot normalize a zero vector");
        let value = Tensor::vector(x.iter().map(|v| v / n).collect());
        self.push(Op::Normalize(a.0), value)
    }

    /// y = M x.
    pub fn matvec(&mut self, m: Var, x: Var) -> Var {
        let mt = self.value(m);
        let xt = self.value(x);
        assert_eq!(xt.cols(), 1, "matvec expects a column vector");
        let mut out = vec![0.0; mt.rows()];
        mt.matvec(xt.data(), &mut out);
        let value = Tensor::vector(out);
        self.push(Op::MatVec { m: m.0, x: x.0 }, value)
    }

    /// y = M^T x.
    pub fn matvec_t(&mut self, m: Var, x: Var) -> Var {
        let mt = self.value(m);
        let xt = self.value(x);
        assert_eq!(xt.cols(), 1, "matvec_t expects a column vector");
        let mut out = vec![0.0; mt.cols()];
        mt.matvec_t(xt.data(), &mut out);
        let value = Tensor::vector(out);
        self.push(Op::MatTVec { m: m.0, x: x.0 }, value)
    }

    /// y = A B^T for A (m,k) and B (n,k).
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let at = self.value(a);
        let bt = self.value(b);
        assert_eq!(at.cols(), bt.cols(), "matmul_t: inner dimensions must agree");
        let (m, n) = (at.rows(), bt.rows());
        let mut out = Tensor::zeros(m, n);
        for r in 0..m {
            for c in 0..n {
                out.set(r, c, dot(at.row(r), bt.row(c)));
            }
        }
        self.push(Op::MatMatT { a: a.0, b: b.0 }, out)
    }

    /// y = M + 1 v^T: add a vector to every row of a matrix.
    pub fn add_row_broadcast(&mut self, m: Var, v: Var) -> Var {
        let mt = self.value(m);
        let vt = self.value(v);
        assert_eq!(mt.cols(), vt.rows(), "row broadcast length mismatch");
        let mut out = mt.clone();
        for r in 0..out.rows() {
            for (o, &add) in out.row_mut(r).iter_mut().zip(vt.data()) {
                *o += add;
            }
        }
        self.push(Op::AddRowBroadcast { m: m.0, v: v.0 }, out)
    }

    /// Stack T column vectors of equal length into a (T, d) matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Var {
        assert!(!rows.is_empty(), "cannot stack zero rows");
        let d = self.value(rows[0]).rows();
        let mut data = Vec::with_capacity(rows.len() * d);
        for &r in rows {
            let v = self.value(r);
            assert_eq!(v.rows(), d, "stacked rows must have equal length");
            assert_eq!(v.cols(), 1, "stack_rows expects column vectors");
            data.extend_from_slice(v.data());
        }
        let value = Tensor::from_vec(data, rows.len(), d);
        self.push(Op::StackRows(rows.iter().map(|v| v.0).collect()), value)
    }

    /// Row `index` of an embedding table, as a column vector.
    pub fn embed_row(&mut self, table: Var, index: usize) -> Var {
        let t = self.value(table);
        assert!(index < t.rows(), "embedding index out of range");
        let value = Tensor::vector(t.row(index).to_vec());
        self.push(Op::EmbedRow { table: table.0, index }, value)
    }

    /// Cross-entropy of a softmax over `logits` against a hard target:
    /// `logsumexp(logits) - logits[target]`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, target: usize) -> Var {
        let l = self.vector(logits);
        assert!(target < l.len(), "target out of range");
        let max = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + l.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        let value = Tensor::scalar(lse - l[target]);
        self.push(Op::SoftmaxCrossEntropy { logits: logits.0, target }, value)
    }

    /// Concatenate two column vectors (composed from pad + add).
    pub fn concat(&mut self, a: Var, b: Var) -> Var {
        let na = self.value(a).rows();
        let nb = self.value(b).rows();
        let pa = self.pad(a, 0, nb);
        let pb = self.pad(b, na, 0);
        self.add(pa, pb)
    }

    fn vector(&self, a: Var) -> &[f64] {
        let t = self.value(a);
        assert_eq!(t.cols(), 1, "expected a column vector");
        t.data()
    }

    fn map(&self, a: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let t = self.value(a);
        Tensor::from_vec(t.data().iter().map(|&x| f(x)).collect(), t.rows(), t.cols())
    }

    fn zip(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.shape(), tb.shape(), "elementwise op shape mismatch");
        Tensor::from_vec(
            ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect(),
            ta.rows(),
            ta.cols(),
        )
    }

    /// Reverse sweep from a scalar loss. Returns accumulated gradients for
    /// every variable that received one (leaves keep theirs; interior
    /// gradients are dropped once propagated).
    pub fn backward(&self, loss: Var) -> Gradients {
        assert_eq!(self.value(loss).len(), 1, "backward seeds a scalar loss");
        let mut grads: Vec<Option<Tensor>> = Vec::new();
        grads.resize_with(self.nodes.len(), || None);
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for id in (0..=loss.0).rev() {
            let node = &self.nodes[id];
            if matches!(node.op, Op::Leaf | Op::Constant) {
                continue;
            }
            let Some(dy) = grads[id].take() else { continue };
            match &node.op {
                Op::Leaf | Op::Constant => unreachable!(),
                Op::Add(a, b) => {
                    self.accum(&mut grads, *a, dy.data());
                    self.accum(&mut grads, *b, dy.data());
                }
                Op::Sub(a, b) => {
                    self.accum(&mut grads, *a, dy.data());
                    let neg: Vec<f64> = dy.data().iter().map(|g| -g).collect();
                    self.accum(&mut grads, *b, &neg);
                }
                Op::Mul(a, b) => {
                    let xa = self.nodes[*a].value.data();
                    let xb = self.nodes[*b].value.data();
                    let da: Vec<f64> = dy.data().iter().zip(xb).map(|(g, v)| g * v).collect();
                    let db: Vec<f64> = dy.data().iter().zip(xa).map(|(g, v)| g * v).collect();
                    self.accum(&mut grads, *a, &da);
                    self.accum(&mut grads, *b, &db);
                }
                Op::Div(a, b) => {
                    let xa = self.nodes[*a].value.data();
                    let xb = self.nodes[*b].value.data();
                    let da: Vec<f64> = dy.data().iter().zip(xb).map(|(g, v)| g / v).collect();
                    let db: Vec<f64> = dy
                        .data()
                        .iter()
                        .zip(xa.iter().zip(xb))
                        .map(|(g, (n, d))| -g * n / (d * d))
                        .collect();
                    self.accum(&mut grads, *a, &da);
                    self.accum(&mut grads, *b, &db);
                }
                Op::ScaleConst(a, c) => {
                    let da: Vec<f64> = dy.data().iter().map(|g| g * c).collect();
                    self.accum(&mut grads, *a, &da);
                }
                Op::Tanh(a) => {
                    let y = node.value.data();
                    let da: Vec<f64> =
                        dy.data().iter().zip(y).map(|(g, v)| g * (1.0 - v * v)).collect();
                    self.accum(&mut grads, *a, &da);
                }
                Op::Logistic(a) => {
                    let y = node.value.data();
                    let da: Vec<f64> =
                        dy.data().iter().zip(y).map(|(g, v)| g * v * (1.0 - v)).collect();
                    self.accum(&mut grads, *a, &da);
                }
                Op::Exp(a) => {
                    let y = node.value.data();
                    let da: Vec<f64> = dy.data().iter().zip(y).map(|(g, v)| g * v).collect();
                    self.accum(&mut grads, *a, &da);
                }
                Op::ClampMin(a, lo) => {
                    let x = self.nodes[*a].value.data();
                    let da: Vec<f64> = dy
                        .data()
                        .iter()
                        .zip(x)
                        .map(|(g, v)| if *v >= *lo { *g } else { 0.0 })
                        .collect();
                    self.accum(&mut grads, *a, &da);
                }
                Op::CumsumInc(a) => {
                    let mut acc = 0.0;
                    let mut da = vec![0.0; dy.len()];
                    for (g, slot) in dy.data().iter().rev().zip(da.iter_mut().rev()) {
                        acc += g;
                        *slot = acc;
                    }
                    self.accum(&mut grads, *a, &da);
                }
                Op::CumprodExc(a) => {
                    // y[n] = prod_{m<n} x[m]; dx[m] = sum_{n>m} dy[n] y[n] / x[m].
                    // Callers keep x away from 0 (clamped survival terms).
                    let x = self.nodes[*a].value.data();
                    let y = node.value.data();
                    let n = x.len();
                    let mut da = vec![0.0; n];
                    let mut acc = 0.0;
                    for m in (0..n).rev() {
                        da[m] = acc / x[m];
                        acc += dy.data()[m] * y[m];
                    }
                    self.accum(&mut grads, *a, &da);
                }
                Op::CumprodInc(a) => {
                    let x = self.nodes[*a].value.data();
                    let y = node.value.data();
                    let n = x.len();
                    let mut da = vec![0.0; n];
                    let mut acc = 0.0;
                    for m in (0..n).rev() {
                        acc += dy.data()[m] * y[m];
                        da[m] = acc / x[m];
                    }
                    self.accum(&mut grads, *a, &da);
                }
                Op::Reverse(a) => {
                    let da: Vec<f64> = dy.data().iter().rev().cloned().collect();
                    self.accum(&mut grads, *a, &da);
                }
                Op::MovingSum { x, back, fwd } => {
                    // The adjoint of a moving window is the mirrored window.
                    let da = crate::scan::movingsum(dy.data(), *fwd, *back);
                    self.accum(&mut grads, *x, &da);
                }
                Op::Slice { x, start, len } => {
                    let total = self.nodes[*x].value.len();
                    let mut da = vec![0.0; total];
                    da[*start..start + len].copy_from_slice(dy.data());
                    self.accum(&mut grads, *x, &da);
                }
                Op::Pad { x, front } => {
                    let inner = self.nodes[*x].value.len();
                    self.accum(&mut grads, *x, &dy.data()[*front..front + inner]);
                }
                Op::BroadcastMul { x, s } => {
                    let c = self.nodes[*s].value.item();
                    let xv = self.nodes[*x].value.data();
                    let da: Vec<f64> = dy.data().iter().map(|g| g * c).collect();
                    let ds = dot(dy.data(), xv);
                    self.accum(&mut grads, *x, &da);
                    self.accum(&mut grads, *s, &[ds]);
                }
                Op::BroadcastAdd { x, s } => {
                    self.accum(&mut grads, *x, dy.data());
                    let ds: f64 = dy.data().iter().sum();
                    self.accum(&mut grads, *s, &[ds]);
                }
                Op::Dot(a, b) => {
                    let g = dy.item();
                    let xa = self.nodes[*a].value.data();
                    let xb = self.nodes[*b].value.data();
                    let da: Vec<f64> = xb.iter().map(|v| g * v).collect();
                    let db: Vec<f64> = xa.iter().map(|v| g * v).collect();
                    self.accum(&mut grads, *a, &da);
                    self.accum(&mut grads, *b, &db);
                }
                Op::Sum(a) => {
                    let g = dy.item();
                    let da = vec![g; self.nodes[*a].value.len()];
                    self.accum(&mut grads, *a, &da);
                }
                Op::Normalize(a) => {
                    let x = self.nodes[*a].value.data();
                    let y = node.value.data();
                    let n = dot(x, x).sqrt();
                    let proj = dot(y, dy.data());
                    let da: Vec<f64> =
                        dy.data().iter().zip(y).map(|(g, v)| (g - v * proj) / n).collect();
                    self.accum(&mut grads, *a, &da);
                }
                Op::MatVec { m, x } => {
                    let mt = &self.nodes[*m].value;
                    let xv = self.nodes[*x].value.data();
                    // dM += dy x^T
                    let mut dm = vec![0.0; mt.rows() * mt.cols()];
                    for (r, g) in dy.data().iter().enumerate() {
                        for (c, xvc) in xv.iter().enumerate() {
                            dm[r * mt.cols() + c] = g * xvc;
                        }
                    }
                    self.accum(&mut grads, *m, &dm);
                    // dx += M^T dy
                    let mut dx = vec![0.0; mt.cols()];
                    mt.matvec_t(dy.data(), &mut dx);
                    self.accum(&mut grads, *x, &dx);
                }
                Op::MatTVec { m, x } => {
                    let mt = &self.nodes[*m].value;
                    let xv = self.nodes[*x].value.data();
                    // dM += x dy^T
                    let mut dm = vec![0.0; mt.rows() * mt.cols()];
                    for (r, xvr) in xv.iter().enumerate() {
                        for (c, g) in dy.data().iter().enumerate() {
                            dm[r * mt.cols() + c] = xvr * g;
                        }
                    }
                    self.accum(&mut grads, *m, &dm);
                    // dx += M dy
                    let mut dx = vec![0.0; mt.rows()];
                    mt.matvec(dy.data(), &mut dx);
                    self.accum(&mut grads, *x, &dx);
                }
                Op::MatMatT { a, b } => {
                    let at = &self.nodes[*a].value;
                    let bt = &self.nodes[*b].value;
                    let (m, n, k) = (at.rows(), bt.rows(), at.cols());
                    // dA += dY B, dB += dY^T A
                    let mut da = vec![0.0; m * k];
                    let mut db = vec![0.0; n * k];
                    for r in 0..m {
                        for c in 0..n {
                            let g = dy.get(r, c);
                            if g == 0.0 {
                                continue;
                            }
                            for i in 0..k {
                                da[r * k + i] += g * bt.get(c, i);
                                db[c * k + i] += g * at.get(r, i);
                            }
                        }
                    }
                    self.accum(&mut grads, *a, &da);
                    self.accum(&mut grads, *b, &db);
                }
                Op::AddRowBroadcast { m, v } => {
                    self.accum(&mut grads, *m, dy.data());
                    let cols = self.nodes[*v].value.rows();
                    let mut dv = vec![0.0; cols];
                    for r in 0..dy.rows() {
                        for (slot, g) in dv.iter_mut().zip(dy.row(r)) {
                            *slot += g;
                        }
                    }
                    self.accum(&mut grads, *v, &dv);
                }
                Op::StackRows(rows) => {
                    for (r, &input) in rows.iter().enumerate() {
                        self.accum(&mut grads, input, dy.row(r));
                    }
                }
                Op::EmbedRow { table, index } => {
                    let t = &self.nodes[*table].value;
                    let mut dt = vec![0.0; t.rows() * t.cols()];
                    dt[index * t.cols()..(index + 1) * t.cols()].copy_from_slice(dy.data());
                    self.accum(&mut grads, *table, &dt);
                }
                Op::SoftmaxCrossEntropy { logits, target } => {
                    let g = dy.item();
                    let l = self.nodes[*logits].value.data();
                    let max = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let exps: Vec<f64> = l.iter().map(|&x| (x - max).exp()).collect();
                    let total: f64 = exps.iter().sum();
                    let da: Vec<f64> = exps
                        .iter()
                        .enumerate()
                        .map(|(i, e)| {
                            let soft = e / total;
                            g * (soft - if i == *target { 1.0 } else { 0.0 })
                        })
                        .collect();
                    self.accum(&mut grads, *logits, &da);
                }
            }
        }
        Gradients { grads }
    }

    fn accum(&self, grads: &mut [Option<Tensor>], id: usize, contribution: &[f64]) {
        let node = &self.nodes[id];
        debug_assert_eq!(contribution.len(), node.value.len());
        match &mut grads[id] {
            Some(existing) => {
                for (g, c) in existing.data_mut().iter_mut().zip(contribution) {
                    *g += c;
                }
            }
            slot => {
                let (r, c) = node.value.shape();
                *slot = Some(Tensor::from_vec(contribution.to_vec(), r, c));
            }
        }
    }
}

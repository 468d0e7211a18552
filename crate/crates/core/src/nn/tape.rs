//! Reverse-mode automatic differentiation over dense tensors.
//!
//! A [`Tape`] records every operation of one forward pass in execution
//! order, which is already a topological order: an operation can only
//! consume values that exist when it runs. [`Tape::backward`] consumes
//! the tape, walks the record once in reverse, and returns the
//! gradients of the loss with respect to every `leaf` node.
//!
//! Shape errors are programmer errors and panic with both shapes in the
//! message.

use rand::Rng;

use super::tensor::Tensor;

/// Handle to a value on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    /// External differentiable input (parameter or data requiring grad).
    Leaf,
    /// External input that never needs a gradient.
    Constant,
    /// `[m,k] x [k,n] -> [m,n]`
    MatMul(Var, Var),
    /// `[m,k] x [k] -> [m]`
    MatVec(Var, Var),
    /// `[k] . [k] -> scalar`
    Dot(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    /// Elementwise product of same-shape tensors.
    Mul(Var, Var),
    /// Multiply by a compile-time constant factor.
    MulConst(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    /// Max-subtracted softmax over a vector.
    Softmax(Var),
    /// 1-D concatenation; scalars are treated as length-1 segments.
    Concat(Vec<Var>),
    /// Stack n same-length vectors into an `[n,d]` matrix.
    StackRows(Vec<Var>),
    /// Mean over the rows of a matrix: `[n,d] -> [d]`.
    MeanRows(Var),
    /// Mean over all elements: `-> scalar`.
    MeanElems(Var),
    /// Extract row `i` of a matrix as a vector.
    Row(Var, usize),
    /// `weights [n] x rows [n,d] -> [d]`, the weighted sum of rows.
    WeightedRows(Var, Var),
    /// Gather rows `ids` of an embedding matrix `[v,k] -> [len,k]`.
    EmbeddingLookup(Var, Vec<usize>),
    /// Elementwise product with a fixed (pre-scaled) dropout mask.
    Dropout(Var, Vec<f64>),
    /// `sum((a - b)^2) -> scalar`
    SquaredError(Var, Var),
    /// `sum(a^2) -> scalar`
    SumSquares(Var),
    /// `-ln(max(p[target], floor)) -> scalar`
    Nll(Var, usize),
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Minimum probability fed to the log inside [`Tape::nll`].
pub const NLL_FLOOR: f64 = 1e-12;

/// Pre-activation magnitude beyond which tanh/sigmoid are treated as
/// saturated for gradient-check purposes.
pub const SATURATION_BOUND: f64 = 4.0;

/// Records one forward pass; single-threaded by construction.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    nll_floor_events: usize,
    saturated: bool,
}

/// Gradients produced by [`Tape::backward`], indexed by the `Var`
/// handles of the consumed tape.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `var`, if `var` required one.
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads[var.0].as_ref()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Times a probability hit the [`NLL_FLOOR`] inside `nll`.
    pub fn nll_floor_events(&self) -> usize {
        self.nll_floor_events
    }

    /// Whether any tanh/sigmoid pre-activation exceeded
    /// [`SATURATION_BOUND`] in magnitude during this pass.
    pub fn saturated(&self) -> bool {
        self.saturated
    }

    /// A differentiable input.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A non-differentiable input.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        debug_assert!(value.all_finite(), "non-finite tensor recorded on tape");
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert!(
            ta.ndim() == 2 && tb.ndim() == 2 && ta.cols() == tb.rows(),
            "matmul shape mismatch: {:?} vs {:?}",
            ta.shape(),
            tb.shape()
        );
        let value = ta.matmul(tb);
        let rg = self.any_grad(&[a, b]);
        self.push(value, Op::MatMul(a, b), rg)
    }

    pub fn matvec(&mut self, m: Var, x: Var) -> Var {
        let (tm, tx) = (&self.nodes[m.0].value, &self.nodes[x.0].value);
        assert!(
            tm.ndim() == 2 && tx.ndim() == 1 && tm.cols() == tx.len(),
            "matvec shape mismatch: {:?} vs {:?}",
            tm.shape(),
            tx.shape()
        );
        let rows = tm.rows();
        let mut out = vec![0.0; rows];
        for (i, o) in out.iter_mut().enumerate() {
            *o = tm
                .row_slice(i)
                .iter()
                .zip(tx.data())
                .map(|(a, b)| a * b)
                .sum();
        }
        let rg = self.any_grad(&[m, x]);
        self.push(Tensor::vector(out), Op::MatVec(m, x), rg)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert!(
            ta.shape() == tb.shape() && ta.ndim() == 1,
            "dot shape mismatch: {:?} vs {:?}",
            ta.shape(),
            tb.shape()
        );
        let value = Tensor::scalar(ta.dot(tb));
        let rg = self.any_grad(&[a, b]);
        self.push(value, Op::Dot(a, b), rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.nodes[a.0].value.zip(&self.nodes[b.0].value, |x, y| x + y);
        let rg = self.any_grad(&[a, b]);
        self.push(value, Op::Add(a, b), rg)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = self.nodes[a.0].value.zip(&self.nodes[b.0].value, |x, y| x - y);
        let rg = self.any_grad(&[a, b]);
        self.push(value, Op::Sub(a, b), rg)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.nodes[a.0].value.zip(&self.nodes[b.0].value, |x, y| x * y);
        let rg = self.any_grad(&[a, b]);
        self.push(value, Op::Mul(a, b), rg)
    }

    pub fn mul_const(&mut self, a: Var, c: f64) -> Var {
        let value = self.nodes[a.0].value.map(|x| x * c);
        let rg = self.any_grad(&[a]);
        self.push(value, Op::MulConst(a, c), rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let input = &self.nodes[a.0].value;
        if input.data().iter().any(|v| v.abs() > SATURATION_BOUND) {
            self.saturated = true;
        }
        let value = self.nodes[a.0].value.map(f64::tanh);
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Tanh(a), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let input = &self.nodes[a.0].value;
        if input.data().iter().any(|v| v.abs() > SATURATION_BOUND) {
            self.saturated = true;
        }
        let value = self.nodes[a.0].value.map(|x| 1.0 / (1.0 + (-x).exp()));
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Sigmoid(a), rg)
    }

    /// Numerically stable softmax over a vector.
    pub fn softmax(&mut self, a: Var) -> Var {
        let input = &self.nodes[a.0].value;
        assert_eq!(
            input.ndim(),
            1,
            "softmax expects a vector, found shape {:?}",
            input.shape()
        );
        let max = input.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = input.data().iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let value = Tensor::vector(exps.into_iter().map(|e| e / sum).collect());
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Softmax(a), rg)
    }

    /// Concatenates vectors and scalars into one vector.
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat of zero tensors");
        let mut data = Vec::new();
        for p in parts {
            let t = &self.nodes[p.0].value;
            assert!(
                t.ndim() <= 1,
                "concat expects scalars or vectors, found shape {:?}",
                t.shape()
            );
            data.extend_from_slice(t.data());
        }
        let rg = self.any_grad(parts);
        self.push(Tensor::vector(data), Op::Concat(parts.to_vec()), rg)
    }

    /// Stacks same-length vectors into an `[n, d]` matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Var {
        assert!(!rows.is_empty(), "stack_rows of zero tensors");
        let d = self.nodes[rows[0].0].value.len();
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let t = &self.nodes[r.0].value;
            assert!(
                t.ndim() == 1 && t.len() == d,
                "stack_rows shape mismatch: {:?} vs [{}]",
                t.shape(),
                d
            );
            data.extend_from_slice(t.data());
        }
        let rg = self.any_grad(rows);
        self.push(
            Tensor::matrix(rows.len(), d, data),
            Op::StackRows(rows.to_vec()),
            rg,
        )
    }

    pub fn mean_rows(&mut self, m: Var) -> Var {
        let t = &self.nodes[m.0].value;
        assert_eq!(t.ndim(), 2, "mean_rows expects a matrix, found {:?}", t.shape());
        let (n, d) = (t.rows(), t.cols());
        let mut out = vec![0.0; d];
        for i in 0..n {
            for (o, &v) in out.iter_mut().zip(t.row_slice(i)) {
                *o += v;
            }
        }
        for o in out.iter_mut() {
            *o /= n as f64;
        }
        let rg = self.any_grad(&[m]);
        self.push(Tensor::vector(out), Op::MeanRows(m), rg)
    }

    pub fn mean_elems(&mut self, a: Var) -> Var {
        let t = &self.nodes[a.0].value;
        let n = t.len();
        assert!(n > 0, "mean_elems of empty tensor");
        let value = Tensor::scalar(t.data().iter().sum::<f64>() / n as f64);
        let rg = self.any_grad(&[a]);
        self.push(value, Op::MeanElems(a), rg)
    }

    pub fn row(&mut self, m: Var, i: usize) -> Var {
        let t = &self.nodes[m.0].value;
        assert!(
            t.ndim() == 2 && i < t.rows(),
            "row {} out of bounds for shape {:?}",
            i,
            t.shape()
        );
        let value = Tensor::vector(t.row_slice(i).to_vec());
        let rg = self.any_grad(&[m]);
        self.push(value, Op::Row(m, i), rg)
    }

    /// Weighted sum of the rows of `rows` with weights `weights`.
    pub fn weighted_rows(&mut self, weights: Var, rows: Var) -> Var {
        let (tw, tr) = (&self.nodes[weights.0].value, &self.nodes[rows.0].value);
        assert!(
            tw.ndim() == 1 && tr.ndim() == 2 && tw.len() == tr.rows(),
            "weighted_rows shape mismatch: {:?} vs {:?}",
            tw.shape(),
            tr.shape()
        );
        let d = tr.cols();
        let mut out = vec![0.0; d];
        for (i, &w) in tw.data().iter().enumerate() {
            for (o, &v) in out.iter_mut().zip(tr.row_slice(i)) {
                *o += w * v;
            }
        }
        let rg = self.any_grad(&[weights, rows]);
        self.push(Tensor::vector(out), Op::WeightedRows(weights, rows), rg)
    }

    /// Gathers rows `ids` from an embedding matrix.
    pub fn embedding_lookup(&mut self, table: Var, ids: &[usize]) -> Var {
        let t = &self.nodes[table.0].value;
        assert_eq!(t.ndim(), 2, "embedding table must be a matrix, found {:?}", t.shape());
        assert!(!ids.is_empty(), "embedding_lookup with no ids");
        let (v, k) = (t.rows(), t.cols());
        let mut data = Vec::with_capacity(ids.len() * k);
        for &id in ids {
            assert!(id < v, "embedding id {} out of range for table [{}, {}]", id, v, k);
            data.extend_from_slice(t.row_slice(id));
        }
        let rg = self.any_grad(&[table]);
        self.push(
            Tensor::matrix(ids.len(), k, data),
            Op::EmbeddingLookup(table, ids.to_vec()),
            rg,
        )
    }

    /// Inverted dropout: in train mode keeps each element with
    /// probability `1 - drop_prob` and scales survivors by
    /// `1/(1 - drop_prob)`; in eval mode returns the input unchanged.
    pub fn dropout<R: Rng>(&mut self, a: Var, drop_prob: f64, train: bool, rng: &mut R) -> Var {
        assert!(
            (0.0..1.0).contains(&drop_prob),
            "drop probability {} outside [0, 1)",
            drop_prob
        );
        if !train || drop_prob == 0.0 {
            return a;
        }
        let keep = 1.0 - drop_prob;
        let t = &self.nodes[a.0].value;
        let mask: Vec<f64> = (0..t.len())
            .map(|_| {
                if rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        let data: Vec<f64> = t.data().iter().zip(mask.iter()).map(|(v, m)| v * m).collect();
        let value = Tensor::new(t.shape().to_vec(), data);
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Dropout(a, mask), rg)
    }

    /// `sum((a - b)^2)` as a scalar.
    pub fn squared_error(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(
            ta.shape(),
            tb.shape(),
            "squared_error shape mismatch: {:?} vs {:?}",
            ta.shape(),
            tb.shape()
        );
        let value = Tensor::scalar(
            ta.data()
                .iter()
                .zip(tb.data())
                .map(|(x, y)| (x - y) * (x - y))
                .sum(),
        );
        let rg = self.any_grad(&[a, b]);
        self.push(value, Op::SquaredError(a, b), rg)
    }

    /// `sum(a^2)` as a scalar.
    pub fn sum_squares(&mut self, a: Var) -> Var {
        let value = Tensor::scalar(self.nodes[a.0].value.data().iter().map(|v| v * v).sum());
        let rg = self.any_grad(&[a]);
        self.push(value, Op::SumSquares(a), rg)
    }

    /// Negative log-likelihood of `target` under a probability vector.
    pub fn nll(&mut self, probs: Var, target: usize) -> Var {
        let t = &self.nodes[probs.0].value;
        assert!(
            t.ndim() == 1 && target < t.len(),
            "nll target {} out of range for shape {:?}",
            target,
            t.shape()
        );
        let p = t.data()[target];
        let clamped = if p < NLL_FLOOR {
            self.nll_floor_events += 1;
            NLL_FLOOR
        } else {
            p
        };
        let value = Tensor::scalar(-clamped.ln());
        let rg = self.any_grad(&[probs]);
        self.push(value, Op::Nll(probs, target), rg)
    }

    /// Backpropagates from a scalar `loss`, consuming the tape.
    ///
    /// Every `leaf` reachable from `loss` ends up with its gradient in
    /// the returned [`Gradients`]; the tape itself is dropped, so each
    /// recorded operation is visited exactly once.
    pub fn backward(self, loss: Var) -> Gradients {
        let node = &self.nodes[loss.0];
        assert!(
            node.value.is_scalar(),
            "backward requires a scalar loss, found shape {:?}",
            node.value.shape()
        );
        assert!(!self.nodes.is_empty(), "backward on empty tape");

        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..self.nodes.len()).rev() {
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let Some(out_grad) = grads[idx].take() else {
                continue;
            };
            self.accumulate(idx, &out_grad, &mut grads);
            // Leaves keep their gradient for the caller.
            if matches!(self.nodes[idx].op, Op::Leaf) {
                grads[idx] = Some(out_grad);
            }
        }

        Gradients { grads }
    }

    /// Adds `contribution` into the gradient slot of `var` if it
    /// participates in differentiation.
    fn accum(&self, grads: &mut [Option<Tensor>], var: Var, contribution: Tensor) {
        if !self.nodes[var.0].requires_grad {
            return;
        }
        match &mut grads[var.0] {
            Some(g) => g.add_assign(&contribution),
            slot @ None => *slot = Some(contribution),
        }
    }

    fn accumulate(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        match &self.nodes[idx].op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                self.accum(grads, *a, g.matmul(&tb.transpose()));
                self.accum(grads, *b, ta.transpose().matmul(g));
            }
            Op::MatVec(m, x) => {
                let (tm, tx) = (&self.nodes[m.0].value, &self.nodes[x.0].value);
                let (rows, cols) = (tm.rows(), tm.cols());
                if self.nodes[m.0].requires_grad {
                    let mut dm = vec![0.0; rows * cols];
                    for i in 0..rows {
                        let gi = g.data()[i];
                        for (d, &xv) in dm[i * cols..(i + 1) * cols].iter_mut().zip(tx.data()) {
                            *d += gi * xv;
                        }
                    }
                    self.accum(grads, *m, Tensor::matrix(rows, cols, dm));
                }
                if self.nodes[x.0].requires_grad {
                    let mut dx = vec![0.0; cols];
                    for i in 0..rows {
                        let gi = g.data()[i];
                        for (d, &mv) in dx.iter_mut().zip(tm.row_slice(i)) {
                            *d += gi * mv;
                        }
                    }
                    self.accum(grads, *x, Tensor::vector(dx));
                }
            }
            Op::Dot(a, b) => {
                let s = g.scalar_value();
                let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                self.accum(grads, *a, tb.map(|v| v * s));
                self.accum(grads, *b, ta.map(|v| v * s));
            }
            Op::Add(a, b) => {
                self.accum(grads, *a, g.clone());
                self.accum(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accum(grads, *a, g.clone());
                self.accum(grads, *b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                self.accum(grads, *a, g.zip(tb, |gv, bv| gv * bv));
                self.accum(grads, *b, g.zip(ta, |gv, av| gv * av));
            }
            Op::MulConst(a, c) => {
                self.accum(grads, *a, g.map(|v| v * c));
            }
            Op::Tanh(a) => {
                let y = &self.nodes[idx].value;
                self.accum(grads, *a, g.zip(y, |gv, yv| gv * (1.0 - yv * yv)));
            }
            Op::Sigmoid(a) => {
                let y = &self.nodes[idx].value;
                self.accum(grads, *a, g.zip(y, |gv, yv| gv * yv * (1.0 - yv)));
            }
            Op::Softmax(a) => {
                let y = &self.nodes[idx].value;
                let inner: f64 = g.data().iter().zip(y.data()).map(|(gv, yv)| gv * yv).sum();
                self.accum(grads, *a, g.zip(y, |gv, yv| yv * (gv - inner)));
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let t = &self.nodes[p.0].value;
                    let len = t.len();
                    let piece = Tensor::new(
                        t.shape().to_vec(),
                        g.data()[offset..offset + len].to_vec(),
                    );
                    self.accum(grads, *p, piece);
                    offset += len;
                }
            }
            Op::StackRows(rows) => {
                let d = g.cols();
                for (i, r) in rows.iter().enumerate() {
                    self.accum(
                        grads,
                        *r,
                        Tensor::vector(g.data()[i * d..(i + 1) * d].to_vec()),
                    );
                }
            }
            Op::MeanRows(m) => {
                let t = &self.nodes[m.0].value;
                let (n, d) = (t.rows(), t.cols());
                let scale = 1.0 / n as f64;
                let mut dm = vec![0.0; n * d];
                for i in 0..n {
                    for (dst, &gv) in dm[i * d..(i + 1) * d].iter_mut().zip(g.data()) {
                        *dst = gv * scale;
                    }
                }
                self.accum(grads, *m, Tensor::matrix(n, d, dm));
            }
            Op::MeanElems(a) => {
                let t = &self.nodes[a.0].value;
                let scale = g.scalar_value() / t.len() as f64;
                self.accum(grads, *a, t.map(|_| scale));
            }
            Op::Row(m, i) => {
                let t = &self.nodes[m.0].value;
                let (rows, cols) = (t.rows(), t.cols());
                let mut dm = vec![0.0; rows * cols];
                dm[i * cols..(i + 1) * cols].copy_from_slice(g.data());
                self.accum(grads, *m, Tensor::matrix(rows, cols, dm));
            }
            Op::WeightedRows(w, rows) => {
                let (tw, tr) = (&self.nodes[w.0].value, &self.nodes[rows.0].value);
                let (n, d) = (tr.rows(), tr.cols());
                if self.nodes[w.0].requires_grad {
                    let mut dw = vec![0.0; n];
                    for (i, dst) in dw.iter_mut().enumerate() {
                        *dst = g.data().iter().zip(tr.row_slice(i)).map(|(a, b)| a * b).sum();
                    }
                    self.accum(grads, *w, Tensor::vector(dw));
                }
                if self.nodes[rows.0].requires_grad {
                    let mut dr = vec![0.0; n * d];
                    for (i, &wv) in tw.data().iter().enumerate() {
                        for (dst, &gv) in dr[i * d..(i + 1) * d].iter_mut().zip(g.data()) {
                            *dst = wv * gv;
                        }
                    }
                    self.accum(grads, *rows, Tensor::matrix(n, d, dr));
                }
            }
            Op::EmbeddingLookup(table, ids) => {
                let t = &self.nodes[table.0].value;
                let (v, k) = (t.rows(), t.cols());
                let mut dt = vec![0.0; v * k];
                for (j, &id) in ids.iter().enumerate() {
                    for (dst, &gv) in dt[id * k..(id + 1) * k]
                        .iter_mut()
                        .zip(&g.data()[j * k..(j + 1) * k])
                    {
                        *dst += gv;
                    }
                }
                self.accum(grads, *table, Tensor::matrix(v, k, dt));
            }
            Op::Dropout(a, mask) => {
                let data: Vec<f64> = g.data().iter().zip(mask).map(|(gv, m)| gv * m).collect();
                let t = &self.nodes[a.0].value;
                self.accum(grads, *a, Tensor::new(t.shape().to_vec(), data));
            }
            Op::SquaredError(a, b) => {
                let s = g.scalar_value();
                let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                let diff = ta.zip(tb, |x, y| 2.0 * (x - y) * s);
                self.accum(grads, *b, diff.map(|v| -v));
                self.accum(grads, *a, diff);
            }
            Op::SumSquares(a) => {
                let s = g.scalar_value();
                let ta = &self.nodes[a.0].value;
                self.accum(grads, *a, ta.map(|v| 2.0 * v * s));
            }
            Op::Nll(probs, target) => {
                let t = &self.nodes[probs.0].value;
                let p = t.data()[*target].max(NLL_FLOOR);
                let mut dp = vec![0.0; t.len()];
                dp[*target] = -g.scalar_value() / p;
                self.accum(grads, *probs, Tensor::vector(dp));
            }
        }
    }
}

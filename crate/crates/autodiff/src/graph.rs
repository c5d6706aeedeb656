//! The computation tape: node storage, forward ops and backward rules.

use crate::{Error, Real, Result};

/// Identity of a tensor within one [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId(usize);

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
enum Op<R> {
    Leaf,
    /// `[M,K] x [K,N]`
    MatMul2 { a: TensorId, b: TensorId },
    /// `[B,M,K] x [B,K,N]`, batch dimensions equal
    MatMul3 { a: TensorId, b: TensorId },
    Add { a: TensorId, b: TensorId },
    /// broadcast `bias` (length = trailing dim) over all leading axes
    BiasAdd { a: TensorId, bias: TensorId },
    /// add a constant buffer (no gradient through the constant)
    AddConst { a: TensorId },
    /// elementwise multiply by a constant buffer
    MulConst { a: TensorId, c: Vec<R> },
    Scale { a: TensorId, k: R },
    Relu { a: TensorId },
    Softplus { a: TensorId },
    /// softmax over the trailing axis, with per-row max subtraction
    SoftmaxLast { a: TensorId },
    /// per-trailing-slice normalization; saved = (mean, inv_std) per slice
    LayerNorm {
        a: TensorId,
        gain: TensorId,
        bias: TensorId,
        saved: Vec<(R, R)>,
    },
    Permute { a: TensorId, perm: Vec<usize> },
    Reshape { a: TensorId },
    /// `a` is `[N, D]`; output is `[rows.len(), D]`
    GatherRows { a: TensorId, rows: Vec<usize> },
    /// stack equal-shape tensors along a new leading axis
    Stack0 { inputs: Vec<TensorId> },
    SumAll { a: TensorId },
}

#[derive(Debug)]
struct Node<R> {
    shape: Vec<usize>,
    data: Vec<R>,
    grad: Vec<R>,
    op: Op<R>,
    requires_grad: bool,
}

/// A per-forward-pass computation tape. Append-only; node order is a
/// topological order by construction, so backward is a single reverse scan.
#[derive(Debug, Default)]
pub struct Graph<R: Real> {
    nodes: Vec<Node<R>>,
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl<R: Real> Graph<R> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<R>, op: Op<R>, requires_grad: bool) -> TensorId {
        debug_assert_eq!(numel(&shape), data.len());
        self.nodes.push(Node {
            shape,
            data,
            grad: Vec::new(),
            op,
            requires_grad,
        });
        TensorId(self.nodes.len() - 1)
    }

    fn needs_grad(&self, ids: &[TensorId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].requires_grad)
    }

    /// Leaf tensor that does not receive a gradient.
    pub fn input(&mut self, shape: &[usize], data: Vec<R>) -> Result<TensorId> {
        if numel(shape) != data.len() {
            return Err(Error::BadLength {
                op: "input",
                shape: shape.to_vec(),
                got: data.len(),
            });
        }
        Ok(self.push(shape.to_vec(), data, Op::Leaf, false))
    }

    /// Leaf tensor that participates in the backward pass.
    pub fn param(&mut self, shape: &[usize], data: Vec<R>) -> Result<TensorId> {
        if numel(shape) != data.len() {
            return Err(Error::BadLength {
                op: "param",
                shape: shape.to_vec(),
                got: data.len(),
            });
        }
        Ok(self.push(shape.to_vec(), data, Op::Leaf, true))
    }

    pub fn shape(&self, id: TensorId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn data(&self, id: TensorId) -> &[R] {
        &self.nodes[id.0].data
    }

    /// Gradient buffer, populated after [`Graph::backward`]. Empty slice if
    /// the node does not require a gradient or backward has not run.
    pub fn grad(&self, id: TensorId) -> &[R] {
        &self.nodes[id.0].grad
    }

    // ---- forward ops ----

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        match (sa.len(), sb.len()) {
            (2, 2) => {
                let (m, k) = (sa[0], sa[1]);
                let (k2, n) = (sb[0], sb[1]);
                if k != k2 {
                    return Err(Error::ShapeMismatch { op: "matmul", lhs: sa, rhs: sb });
                }
                let mut out = vec![R::zero(); m * n];
                matmul_kernel(self.data(a), self.data(b), &mut out, m, k, n);
                let rg = self.needs_grad(&[a, b]);
                Ok(self.push(vec![m, n], out, Op::MatMul2 { a, b }, rg))
            }
            (3, 3) => {
                let (ba, m, k) = (sa[0], sa[1], sa[2]);
                let (bb, k2, n) = (sb[0], sb[1], sb[2]);
                if ba != bb || k != k2 {
                    return Err(Error::ShapeMismatch { op: "matmul", lhs: sa, rhs: sb });
                }
                let mut out = vec![R::zero(); ba * m * n];
                for i in 0..ba {
                    matmul_kernel(
                        &self.data(a)[i * m * k..(i + 1) * m * k],
                        &self.data(b)[i * k * n..(i + 1) * k * n],
                        &mut out[i * m * n..(i + 1) * m * n],
                        m,
                        k,
                        n,
                    );
                }
                let rg = self.needs_grad(&[a, b]);
                Ok(self.push(vec![ba, m, n], out, Op::MatMul3 { a, b }, rg))
            }
            _ => Err(Error::ShapeMismatch { op: "matmul", lhs: sa, rhs: sb }),
        }
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::ShapeMismatch {
                op: "add",
                lhs: self.shape(a).to_vec(),
                rhs: self.shape(b).to_vec(),
            });
        }
        let data: Vec<R> = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .map(|(&x, &y)| x + y)
            .collect();
        let shape = self.shape(a).to_vec();
        let rg = self.needs_grad(&[a, b]);
        Ok(self.push(shape, data, Op::Add { a, b }, rg))
    }

    pub fn bias_add(&mut self, a: TensorId, bias: TensorId) -> Result<TensorId> {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(bias).to_vec();
        let d = *sa.last().unwrap_or(&0);
        if sb != [d] {
            return Err(Error::ShapeMismatch { op: "bias_add", lhs: sa, rhs: sb });
        }
        let bdat = self.data(bias).to_vec();
        let data: Vec<R> = self
            .data(a)
            .iter()
            .enumerate()
            .map(|(i, &x)| x + bdat[i % d])
            .collect();
        let rg = self.needs_grad(&[a, bias]);
        Ok(self.push(sa, data, Op::BiasAdd { a, bias }, rg))
    }

    /// Add a constant buffer elementwise (e.g. positional encodings).
    pub fn add_const(&mut self, a: TensorId, c: &[R]) -> Result<TensorId> {
        if c.len() != self.data(a).len() {
            return Err(Error::BadLength {
                op: "add_const",
                shape: self.shape(a).to_vec(),
                got: c.len(),
            });
        }
        let data: Vec<R> = self.data(a).iter().zip(c).map(|(&x, &y)| x + y).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.needs_grad(&[a]);
        Ok(self.push(shape, data, Op::AddConst { a }, rg))
    }

    /// Elementwise multiply by a constant buffer (e.g. bit signs in a loss).
    pub fn mul_const(&mut self, a: TensorId, c: &[R]) -> Result<TensorId> {
        if c.len() != self.data(a).len() {
            return Err(Error::BadLength {
                op: "mul_const",
                shape: self.shape(a).to_vec(),
                got: c.len(),
            });
        }
        let data: Vec<R> = self.data(a).iter().zip(c).map(|(&x, &y)| x * y).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.needs_grad(&[a]);
        Ok(self.push(shape, data, Op::MulConst { a, c: c.to_vec() }, rg))
    }

    pub fn scale(&mut self, a: TensorId, k: R) -> Result<TensorId> {
        let data: Vec<R> = self.data(a).iter().map(|&x| x * k).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.needs_grad(&[a]);
        Ok(self.push(shape, data, Op::Scale { a, k }, rg))
    }

    pub fn relu(&mut self, a: TensorId) -> Result<TensorId> {
        let data: Vec<R> = self
            .data(a)
            .iter()
            .map(|&x| if x > R::zero() { x } else { R::zero() })
            .collect();
        let shape = self.shape(a).to_vec();
        let rg = self.needs_grad(&[a]);
        Ok(self.push(shape, data, Op::Relu { a }, rg))
    }

    /// Numerically stable `ln(1 + e^x)`.
    pub fn softplus(&mut self, a: TensorId) -> Result<TensorId> {
        let data: Vec<R> = self.data(a).iter().map(|&x| softplus_scalar(x)).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.needs_grad(&[a]);
        Ok(self.push(shape, data, Op::Softplus { a }, rg))
    }

    /// Softmax over the trailing axis with max subtraction.
    pub fn softmax_rows(&mut self, a: TensorId) -> Result<TensorId> {
        let shape = self.shape(a).to_vec();
        let d = *shape.last().ok_or_else(|| Error::Usage("softmax on rank-0 tensor".into()))?;
        if self.data(a).iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("softmax_rows"));
        }
        let mut data = self.data(a).to_vec();
        for row in data.chunks_mut(d) {
            let max = row.iter().cloned().fold(R::neg_infinity(), R::max);
            let mut sum = R::zero();
            for x in row.iter_mut() {
                *x = (*x - max).exp();
                sum += *x;
            }
            for x in row.iter_mut() {
                *x /= sum;
            }
        }
        let rg = self.needs_grad(&[a]);
        Ok(self.push(shape, data, Op::SoftmaxLast { a }, rg))
    }

    /// Per-trailing-slice zero-mean/unit-variance normalization followed by
    /// an affine transform. `gain` and `bias` have length D (trailing dim).
    pub fn layer_norm(&mut self, a: TensorId, gain: TensorId, bias: TensorId) -> Result<TensorId> {
        let shape = self.shape(a).to_vec();
        let d = *shape.last().ok_or_else(|| Error::Usage("layer_norm on rank-0 tensor".into()))?;
        if self.shape(gain) != [d] || self.shape(bias) != [d] {
            return Err(Error::ShapeMismatch {
                op: "layer_norm",
                lhs: shape,
                rhs: self.shape(gain).to_vec(),
            });
        }
        let eps = R::from_f64(LN_EPS);
        let g = self.data(gain).to_vec();
        let b = self.data(bias).to_vec();
        let mut data = self.data(a).to_vec();
        let n_slices = data.len() / d;
        let mut saved = Vec::with_capacity(n_slices);
        let dn = R::from_f64(d as f64);
        for row in data.chunks_mut(d) {
            let mean = row.iter().cloned().sum::<R>() / dn;
            let var = row.iter().map(|&x| (x - mean) * (x - mean)).sum::<R>() / dn;
            let inv_std = (var + eps).sqrt().recip();
            saved.push((mean, inv_std));
            for (x, (&gi, &bi)) in row.iter_mut().zip(g.iter().zip(&b)) {
                *x = (*x - mean) * inv_std * gi + bi;
            }
        }
        let rg = self.needs_grad(&[a, gain, bias]);
        Ok(self.push(shape, data, Op::LayerNorm { a, gain, bias, saved }, rg))
    }

    pub fn permute(&mut self, a: TensorId, perm: &[usize]) -> Result<TensorId> {
        let sa = self.shape(a).to_vec();
        if perm.len() != sa.len() || {
            let mut p = perm.to_vec();
            p.sort_unstable();
            p != (0..sa.len()).collect::<Vec<_>>()
        } {
            return Err(Error::Usage(format!(
                "invalid permutation {perm:?} for shape {sa:?}"
            )));
        }
        let out_shape: Vec<usize> = perm.iter().map(|&i| sa[i]).collect();
        let mut out = vec![R::zero(); numel(&sa)];
        permute_into(self.data(a), &sa, perm, &mut out);
        let rg = self.needs_grad(&[a]);
        Ok(self.push(out_shape, out, Op::Permute { a, perm: perm.to_vec() }, rg))
    }

    pub fn reshape(&mut self, a: TensorId, shape: &[usize]) -> Result<TensorId> {
        if numel(shape) != self.data(a).len() {
            return Err(Error::BadLength {
                op: "reshape",
                shape: shape.to_vec(),
                got: self.data(a).len(),
            });
        }
        let data = self.data(a).to_vec();
        let rg = self.needs_grad(&[a]);
        Ok(self.push(shape.to_vec(), data, Op::Reshape { a }, rg))
    }

    /// Select rows of a rank-2 tensor.
    pub fn gather_rows(&mut self, a: TensorId, rows: &[usize]) -> Result<TensorId> {
        let sa = self.shape(a).to_vec();
        if sa.len() != 2 {
            return Err(Error::Usage(format!("gather_rows needs rank 2, got {sa:?}")));
        }
        let (n, d) = (sa[0], sa[1]);
        if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
            return Err(Error::Usage(format!("gather_rows: row {bad} out of {n}")));
        }
        let mut data = Vec::with_capacity(rows.len() * d);
        for &r in rows {
            data.extend_from_slice(&self.data(a)[r * d..(r + 1) * d]);
        }
        let rg = self.needs_grad(&[a]);
        Ok(self.push(vec![rows.len(), d], data, Op::GatherRows { a, rows: rows.to_vec() }, rg))
    }

    /// Stack equal-shape tensors along a new leading axis.
    pub fn stack0(&mut self, inputs: &[TensorId]) -> Result<TensorId> {
        if inputs.is_empty() {
            return Err(Error::Usage("stack0 of zero tensors".into()));
        }
        let s0 = self.shape(inputs[0]).to_vec();
        for &id in &inputs[1..] {
            if self.shape(id) != s0.as_slice() {
                return Err(Error::ShapeMismatch {
                    op: "stack0",
                    lhs: s0,
                    rhs: self.shape(id).to_vec(),
                });
            }
        }
        let mut data = Vec::with_capacity(inputs.len() * numel(&s0));
        for &id in inputs {
            data.extend_from_slice(self.data(id));
        }
        let mut shape = vec![inputs.len()];
        shape.extend_from_slice(&s0);
        let rg = self.needs_grad(inputs);
        Ok(self.push(shape, data, Op::Stack0 { inputs: inputs.to_vec() }, rg))
    }

    pub fn sum_all(&mut self, a: TensorId) -> Result<TensorId> {
        let s: R = self.data(a).iter().cloned().sum();
        let rg = self.needs_grad(&[a]);
        Ok(self.push(vec![], vec![s], Op::SumAll { a }, rg))
    }

    // ---- backward ----

    /// Reverse-topological sweep seeding `d(loss)/d(loss) = 1`. `loss` must
    /// be scalar. Populates `grad` for every reachable grad-requiring node.
    pub fn backward(&mut self, loss: TensorId) -> Result<()> {
        if !self.shape(loss).is_empty() && numel(self.shape(loss)) != 1 {
            return Err(Error::NonScalarLoss(self.shape(loss).to_vec()));
        }
        for node in &mut self.nodes {
            if node.requires_grad {
                node.grad = vec![R::zero(); node.data.len()];
            } else {
                node.grad.clear();
            }
        }
        if !self.nodes[loss.0].requires_grad {
            // loss does not depend on any parameter; all grads stay zero
            return Ok(());
        }
        self.nodes[loss.0].grad = vec![R::one()];
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad || self.nodes[i].grad.is_empty() {
                continue;
            }
            let op = self.nodes[i].op.clone();
            let g = self.nodes[i].grad.clone();
            self.backprop_node(i, &op, &g);
        }
        Ok(())
    }

    fn accumulate(&mut self, id: TensorId, contrib: &[R]) {
        let node = &mut self.nodes[id.0];
        if !node.requires_grad {
            return;
        }
        for (dst, &src) in node.grad.iter_mut().zip(contrib) {
            *dst += src;
        }
    }

    fn backprop_node(&mut self, i: usize, op: &Op<R>, g: &[R]) {
        match op {
            Op::Leaf => {}
            Op::MatMul2 { a, b } => {
                let (m, k) = (self.shape(*a)[0], self.shape(*a)[1]);
                let n = self.shape(*b)[1];
                if self.nodes[a.0].requires_grad {
                    // dA = dC · B^T
                    let mut da = vec![R::zero(); m * k];
                    matmul_nt_kernel(g, self.data(*b), &mut da, m, n, k);
                    self.accumulate(*a, &da);
                }
                if self.nodes[b.0].requires_grad {
                    // dB = A^T · dC
                    let mut db = vec![R::zero(); k * n];
                    matmul_tn_kernel(self.data(*a), g, &mut db, m, k, n);
                    self.accumulate(*b, &db);
                }
            }
            Op::MatMul3 { a, b } => {
                let (bs, m, k) = (self.shape(*a)[0], self.shape(*a)[1], self.shape(*a)[2]);
                let n = self.shape(*b)[2];
                if self.nodes[a.0].requires_grad {
                    let mut da = vec![R::zero(); bs * m * k];
                    for ib in 0..bs {
                        matmul_nt_kernel(
                            &g[ib * m * n..(ib + 1) * m * n],
                            &self.data(*b)[ib * k * n..(ib + 1) * k * n],
                            &mut da[ib * m * k..(ib + 1) * m * k],
                            m,
                            n,
                            k,
                        );
                    }
                    self.accumulate(*a, &da);
                }
                if self.nodes[b.0].requires_grad {
                    let mut db = vec![R::zero(); bs * k * n];
                    for ib in 0..bs {
                        matmul_tn_kernel(
                            &self.data(*a)[ib * m * k..(ib + 1) * m * k],
                            &g[ib * m * n..(ib + 1) * m * n],
                            &mut db[ib * k * n..(ib + 1) * k * n],
                            m,
                            k,
                            n,
                        );
                    }
                    self.accumulate(*b, &db);
                }
            }
            Op::Add { a, b } => {
                self.accumulate(*a, g);
                self.accumulate(*b, g);
            }
            Op::BiasAdd { a, bias } => {
                self.accumulate(*a, g);
                if self.nodes[bias.0].requires_grad {
                    let d = self.shape(*bias)[0];
                    let mut db = vec![R::zero(); d];
                    for (i, &gi) in g.iter().enumerate() {
                        db[i % d] += gi;
                    }
                    self.accumulate(*bias, &db);
                }
            }
            Op::AddConst { a } | Op::Reshape { a } => self.accumulate(*a, g),
            Op::MulConst { a, c } => {
                let da: Vec<R> = g.iter().zip(c).map(|(&gi, &ci)| gi * ci).collect();
                self.accumulate(*a, &da);
            }
            Op::Scale { a, k } => {
                let da: Vec<R> = g.iter().map(|&gi| gi * *k).collect();
                self.accumulate(*a, &da);
            }
            Op::Relu { a } => {
                let da: Vec<R> = g
                    .iter()
                    .zip(self.data(*a))
                    .map(|(&gi, &x)| if x > R::zero() { gi } else { R::zero() })
                    .collect();
                self.accumulate(*a, &da);
            }
            Op::Softplus { a } => {
                let da: Vec<R> = g
                    .iter()
                    .zip(self.data(*a))
                    .map(|(&gi, &x)| gi * sigmoid_scalar(x))
                    .collect();
                self.accumulate(*a, &da);
            }
            Op::SoftmaxLast { a } => {
                let d = *self.nodes[i].shape.last().unwrap();
                let y = &self.nodes[i].data;
                let mut da = vec![R::zero(); g.len()];
                for (row, (yrow, grow)) in y.chunks(d).zip(g.chunks(d)).enumerate() {
                    let dot: R = yrow.iter().zip(grow).map(|(&yi, &gi)| yi * gi).sum();
                    for j in 0..d {
                        da[row * d + j] = yrow[j] * (grow[j] - dot);
                    }
                }
                self.accumulate(*a, &da);
            }
            Op::LayerNorm { a, gain, bias, saved } => {
                let d = *self.nodes[i].shape.last().unwrap();
                let dn = R::from_f64(d as f64);
                let x = self.data(*a).to_vec();
                let gvec = self.data(*gain).to_vec();
                let mut da = vec![R::zero(); x.len()];
                let mut dgain = vec![R::zero(); d];
                let mut dbias = vec![R::zero(); d];
                for (row, &(mean, inv_std)) in saved.iter().enumerate() {
                    let xs = &x[row * d..(row + 1) * d];
                    let gs = &g[row * d..(row + 1) * d];
                    // xhat_j = (x_j - mean) * inv_std; gh = gain .* dY
                    let mut mean_gh = R::zero();
                    let mut mean_ghx = R::zero();
                    for j in 0..d {
                        let xhat = (xs[j] - mean) * inv_std;
                        let gh = gs[j] * gvec[j];
                        mean_gh += gh;
                        mean_ghx += gh * xhat;
                        dgain[j] += gs[j] * xhat;
                        dbias[j] += gs[j];
                    }
                    mean_gh /= dn;
                    mean_ghx /= dn;
                    for j in 0..d {
                        let xhat = (xs[j] - mean) * inv_std;
                        let gh = gs[j] * gvec[j];
                        da[row * d + j] = inv_std * (gh - mean_gh - xhat * mean_ghx);
                    }
                }
                self.accumulate(*a, &da);
                self.accumulate(*gain, &dgain);
                self.accumulate(*bias, &dbias);
            }
            Op::Permute { a, perm } => {
                // scatter with the inverse permutation
                let sa = self.shape(*a).to_vec();
                let mut inv = vec![0usize; perm.len()];
                for (j, &p) in perm.iter().enumerate() {
                    inv[p] = j;
                }
                let out_shape: Vec<usize> = perm.iter().map(|&p| sa[p]).collect();
                let mut da = vec![R::zero(); g.len()];
                permute_into(g, &out_shape, &inv, &mut da);
                self.accumulate(*a, &da);
            }
            Op::GatherRows { a, rows } => {
                let d = self.shape(*a)[1];
                let mut da = vec![R::zero(); self.data(*a).len()];
                for (out_r, &src_r) in rows.iter().enumerate() {
                    for j in 0..d {
                        da[src_r * d + j] += g[out_r * d + j];
                    }
                }
                self.accumulate(*a, &da);
            }
            Op::Stack0 { inputs } => {
                let per = if inputs.is_empty() { 0 } else { g.len() / inputs.len() };
                for (idx, &inp) in inputs.iter().enumerate() {
                    self.accumulate(inp, &g[idx * per..(idx + 1) * per]);
                }
            }
            Op::SumAll { a } => {
                let da = vec![g[0]; self.data(*a).len()];
                self.accumulate(*a, &da);
            }
        }
    }
}

#[inline]
fn softplus_scalar<R: Real>(x: R) -> R {
    // max(x, 0) + ln(1 + e^{-|x|})
    let m = if x > R::zero() { x } else { R::zero() };
    m + (-x.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid_scalar<R: Real>(x: R) -> R {
    if x >= R::zero() {
        (R::one() + (-x).exp()).recip()
    } else {
        let e = x.exp();
        e / (R::one() + e)
    }
}

/// `C += A[m,k] · B[k,n]` with C zero on entry (ikj order).
fn matmul_kernel<R: Real>(a: &[R], b: &[R], c: &mut [R], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == R::zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cj, &bj) in crow.iter_mut().zip(brow) {
                *cj += aip * bj;
            }
        }
    }
}

/// `C += A[m,n] · B[k,n]^T` -> `[m,k]`
fn matmul_nt_kernel<R: Real>(a: &[R], b: &[R], c: &mut [R], m: usize, n: usize, k: usize) {
    for i in 0..m {
        let arow = &a[i * n..(i + 1) * n];
        for p in 0..k {
            let brow = &b[p * n..(p + 1) * n];
            let dot: R = arow.iter().zip(brow).map(|(&x, &y)| x * y).sum();
            c[i * k + p] += dot;
        }
    }
}

/// `C += A[m,k]^T · B[m,n]` -> `[k,n]`
fn matmul_tn_kernel<R: Real>(a: &[R], b: &[R], c: &mut [R], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let brow = &b[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == R::zero() {
                continue;
            }
            let crow = &mut c[p * n..(p + 1) * n];
            for (cj, &bj) in crow.iter_mut().zip(brow) {
                *cj += aip * bj;
            }
        }
    }
}

/// Write `src` (shape `in_shape`) permuted by `perm` into `dst`.
fn permute_into<R: Real>(src: &[R], in_shape: &[usize], perm: &[usize], dst: &mut [R]) {
    let rank = in_shape.len();
    if rank == 0 {
        dst[0] = src[0];
        return;
    }
    let mut in_strides = vec![1usize; rank];
    for i in (0..rank - 1).rev() {
        in_strides[i] = in_strides[i + 1] * in_shape[i + 1];
    }
    let out_shape: Vec<usize> = perm.iter().map(|&p| in_shape[p]).collect();
    let mut idx = vec![0usize; rank];
    for slot in dst.iter_mut() {
        let mut src_off = 0;
        for (j, &ij) in idx.iter().enumerate() {
            src_off += ij * in_strides[perm[j]];
        }
        *slot = src[src_off];
        // odometer increment over out_shape
        for j in (0..rank).rev() {
            idx[j] += 1;
            if idx[j] < out_shape[j] {
                break;
            }
            idx[j] = 0;
        }
    }
}

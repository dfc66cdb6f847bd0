use super::nn::ParamStore;
use super::tensor::Tensor;
use crate::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(u32);

/// What produced a node. Parents are earlier node ids, so reverse insertion
/// order is a valid reverse topological order.
#[derive(Debug, Clone)]
enum Op {
    /// Constant input; never receives a gradient.
    Leaf,
    /// Named parameter leaf; `backward` accumulates its gradient into the
    /// [`ParamStore`] it was read from.
    Param(String),
    /// `[n,k] x [k,m]` dense product.
    Matmul(NodeId, NodeId),
    /// `[n,m]` plus a `[m]` bias broadcast over rows.
    AddBias(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    /// Elementwise product, same shapes.
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    Relu(NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Softplus(NodeId),
    /// Column-wise concatenation of rank-2 inputs with equal row counts.
    ConcatCols(Vec<NodeId>),
    /// Per-row convex mix: `out[i,:] = m[i]*a[i,:] + (1-m[i])*b[i,:]`.
    /// The mask is treated as data; no gradient flows into it.
    RowMix { a: NodeId, b: NodeId, mask: NodeId },
    /// Total Gaussian negative log-likelihood of `x` under `N(mean, std^2)`,
    /// reduced to a scalar over all elements.
    GaussianNll { x: NodeId, mean: NodeId, std: NodeId },
    /// Total Bernoulli negative log-likelihood of targets `y` under logits,
    /// `sum(softplus(logit) - y*logit)`, reduced to a scalar.
    BernoulliNll { y: NodeId, logits: NodeId },
    /// Total KL divergence between diagonal Gaussians q and p, scalar.
    KlDiag { mq: NodeId, sq: NodeId, mp: NodeId, sp: NodeId },
    Sum(NodeId),
}

/// Wengert list: values are computed eagerly as ops are recorded;
/// [`Tape::backward`] sweeps it once in reverse.
pub struct Tape {
    vals: Vec<Tensor>,
    ops: Vec<Op>,
    grads: Vec<Option<Tensor>>,
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn ln_2pi() -> f64 {
    (2.0 * std::f64::consts::PI).ln()
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { vals: Vec::new(), ops: Vec::new(), grads: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.vals[id.0 as usize]
    }

    /// Gradient of the last `backward` root with respect to node `id`, if the
    /// node was reached by that sweep.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0 as usize).and_then(|g| g.as_ref())
    }

    fn push(&mut self, val: Tensor, op: Op) -> NodeId {
        let id = NodeId(self.vals.len() as u32);
        self.vals.push(val);
        self.ops.push(op);
        id
    }

    // ─── graph construction ───

    pub fn constant(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Leaf)
    }

    /// Read parameter `name` from `store` onto the tape. The value is copied;
    /// `backward` routes the gradient back into the store by name.
    pub fn param(&mut self, store: &ParamStore, name: &str) -> Result<NodeId> {
        let t = store.value(name)?.clone();
        Ok(self.push(t, Op::Param(name.to_string())))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (&[n, k], &[k2, m]) = (ta.shape(), tb.shape()) else {
            return Err(Error::dim(
                "matmul",
                "two rank-2 tensors",
                format!("{:?} x {:?}", ta.shape(), tb.shape()),
            ));
        };
        if k != k2 {
            return Err(Error::dim(
                "matmul",
                format!("inner dims to agree ([n,{k}] x [{k},m])"),
                format!("{:?} x {:?}", ta.shape(), tb.shape()),
            ));
        }
        let mut out = Tensor::zeros(vec![n, m]);
        gemm_nn(n, k, m, ta.data(), tb.data(), out.data_mut());
        Ok(self.push(out, Op::Matmul(a, b)))
    }

    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(bias));
        let (&[n, m], &[mb]) = (ta.shape(), tb.shape()) else {
            return Err(Error::dim(
                "add_bias",
                "[n,m] matrix and [m] bias",
                format!("{:?} + {:?}", ta.shape(), tb.shape()),
            ));
        };
        if m != mb {
            return Err(Error::dim("add_bias", format!("bias of length {m}"), format!("{mb}")));
        }
        let mut out = ta.clone();
        for i in 0..n {
            let row = &mut out.data_mut()[i * m..(i + 1) * m];
            for (o, b) in row.iter_mut().zip(tb.data()) {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddBias(a, bias)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let out = self.zip(a, b, "add", |x, y| x + y)?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let out = self.zip(a, b, "sub", |x, y| x - y)?;
        Ok(self.push(out, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let out = self.zip(a, b, "mul", |x, y| x * y)?;
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let out = self.map(a, |x| c * x);
        self.push(out, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> NodeId {
        let out = self.map(a, |x| x + c);
        self.push(out, Op::AddScalar(a))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let out = self.map(a, |x| if x > 0.0 { x } else { 0.0 });
        self.push(out, Op::Relu(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let out = self.map(a, f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let out = self.map(a, sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    pub fn softplus(&mut self, a: NodeId) -> NodeId {
        let out = self.map(a, softplus);
        self.push(out, Op::Softplus(a))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::Usage("concat_cols of zero tensors".into()));
        }
        let n = self.value(parts[0]).rows();
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let t = self.value(p);
            let &[np, m] = t.shape() else {
                return Err(Error::dim("concat_cols", "rank-2 inputs", format!("{:?}", t.shape())));
            };
            if np != n {
                return Err(Error::dim("concat_cols", format!("{n} rows"), format!("{np}")));
            }
            widths.push(m);
        }
        let total: usize = widths.iter().sum();
        let mut out = Tensor::zeros(vec![n, total]);
        for i in 0..n {
            let dst = &mut out.data_mut()[i * total..(i + 1) * total];
            let mut off = 0;
            for (&p, &m) in parts.iter().zip(&widths) {
                dst[off..off + m].copy_from_slice(self.vals[p.0 as usize].row(i));
                off += m;
            }
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    /// `out[i,:] = mask[i]*a[i,:] + (1-mask[i])*b[i,:]`. With a binary mask
    /// this is exact branch selection: rows with `mask = 1` equal `a`'s rows
    /// bit for bit. The mask is data, not a differentiable input.
    pub fn row_mix(&mut self, a: NodeId, b: NodeId, mask: NodeId) -> Result<NodeId> {
        let (ta, tb, tm) = (self.value(a), self.value(b), self.value(mask));
        if !ta.same_shape(tb) {
            return Err(Error::dim(
                "row_mix",
                format!("{:?}", ta.shape()),
                format!("{:?}", tb.shape()),
            ));
        }
        let (&[n, m], &[nm]) = (ta.shape(), tm.shape()) else {
            return Err(Error::dim(
                "row_mix",
                "[n,m] branches and [n] mask",
                format!("{:?} with mask {:?}", ta.shape(), tm.shape()),
            ));
        };
        if nm != n {
            return Err(Error::dim("row_mix", format!("mask of length {n}"), format!("{nm}")));
        }
        let mut out = Tensor::zeros(vec![n, m]);
        for i in 0..n {
            let w = tm.data()[i];
            for j in 0..m {
                out.data_mut()[i * m + j] = w * ta.at(i, j) + (1.0 - w) * tb.at(i, j);
            }
        }
        Ok(self.push(out, Op::RowMix { a, b, mask }))
    }

    /// Total negative log-likelihood of `x` under elementwise `N(mean, std^2)`:
    /// `sum(ln std + ln(2 pi)/2 + (x-mean)^2 / (2 std^2))`, a scalar node.
    pub fn gaussian_nll(&mut self, x: NodeId, mean: NodeId, std: NodeId) -> Result<NodeId> {
        let (tx, tm, ts) = (self.value(x), self.value(mean), self.value(std));
        if !tx.same_shape(tm) || !tx.same_shape(ts) {
            return Err(Error::dim(
                "gaussian_nll",
                format!("{:?} for all of x/mean/std", tx.shape()),
                format!("mean {:?}, std {:?}", tm.shape(), ts.shape()),
            ));
        }
        if let Some(bad) = ts.data().iter().find(|&&s| !(s > 0.0)) {
            return Err(Error::Domain(format!("gaussian_nll stddev must be positive, got {bad}")));
        }
        let c = 0.5 * ln_2pi();
        let mut total = 0.0;
        for ((&xv, &mv), &sv) in tx.data().iter().zip(tm.data()).zip(ts.data()) {
            let z = (xv - mv) / sv;
            total += sv.ln() + c + 0.5 * z * z;
        }
        Ok(self.push(Tensor::scalar(total), Op::GaussianNll { x, mean, std }))
    }

    /// Total Bernoulli negative log-likelihood in logit space:
    /// `sum(softplus(logit) - y*logit)`, a scalar node. Targets must lie in
    /// `[0,1]`.
    pub fn bernoulli_nll(&mut self, y: NodeId, logits: NodeId) -> Result<NodeId> {
        let (ty, tl) = (self.value(y), self.value(logits));
        if !ty.same_shape(tl) {
            return Err(Error::dim(
                "bernoulli_nll",
                format!("{:?} for both y and logits", ty.shape()),
                format!("{:?}", tl.shape()),
            ));
        }
        if let Some(bad) = ty.data().iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Domain(format!("bernoulli_nll target must be in [0,1], got {bad}")));
        }
        let mut total = 0.0;
        for (&yv, &lv) in ty.data().iter().zip(tl.data()) {
            total += softplus(lv) - yv * lv;
        }
        Ok(self.push(Tensor::scalar(total), Op::BernoulliNll { y, logits }))
    }

    /// Total analytic KL divergence `KL(q || p)` between elementwise diagonal
    /// Gaussians, `sum(ln(sp/sq) + (sq^2 + (mq-mp)^2) / (2 sp^2) - 1/2)`,
    /// a scalar node.
    pub fn kl_diag(&mut self, mq: NodeId, sq: NodeId, mp: NodeId, sp: NodeId) -> Result<NodeId> {
        let (tmq, tsq, tmp, tsp) =
            (self.value(mq), self.value(sq), self.value(mp), self.value(sp));
        if !tmq.same_shape(tsq) || !tmq.same_shape(tmp) || !tmq.same_shape(tsp) {
            return Err(Error::dim(
                "kl_diag",
                format!("{:?} for all four inputs", tmq.shape()),
                format!(
                    "sq {:?}, mp {:?}, sp {:?}",
                    tsq.shape(),
                    tmp.shape(),
                    tsp.shape()
                ),
            ));
        }
        for (label, t) in [("q", tsq), ("p", tsp)] {
            if let Some(bad) = t.data().iter().find(|&&s| !(s > 0.0)) {
                return Err(Error::Domain(format!("kl_diag stddev of {label} must be positive, got {bad}")));
            }
        }
        let mut total = 0.0;
        for i in 0..tmq.len() {
            let (mqv, sqv) = (tmq.data()[i], tsq.data()[i]);
            let (mpv, spv) = (tmp.data()[i], tsp.data()[i]);
            let d = mqv - mpv;
            total += (spv / sqv).ln() + (sqv * sqv + d * d) / (2.0 * spv * spv) - 0.5;
        }
        Ok(self.push(Tensor::scalar(total), Op::KlDiag { mq, sq, mp, sp }))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let total = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(total), Op::Sum(a))
    }

    /// Reparameterized Gaussian sample `mean + std * noise` with `noise` a
    /// constant tensor of standard-normal draws (composition of `mul` and
    /// `add`; with zero noise the result equals `mean` exactly).
    pub fn reparam(&mut self, mean: NodeId, std: NodeId, noise: NodeId) -> Result<NodeId> {
        let scaled = self.mul(std, noise)?;
        self.add(mean, scaled)
    }

    // ─── backward ───

    /// Reverse sweep from a scalar `root`. Node gradients from any previous
    /// sweep on this tape are cleared first; parameter gradients found on the
    /// way are *accumulated* into `store`, so two sweeps (for two losses) add
    /// up until the optimizer step consumes and zeroes them.
    pub fn backward(&mut self, root: NodeId, store: &mut ParamStore) -> Result<()> {
        if self.value(root).len() != 1 {
            return Err(Error::Usage(format!(
                "backward needs a scalar root, got shape {:?}",
                self.value(root).shape()
            )));
        }
        self.grads = vec![None; self.vals.len()];
        self.grads[root.0 as usize] = Some(Tensor::scalar(1.0));

        for i in (0..=root.0 as usize).rev() {
            let Some(g) = self.grads[i].take() else { continue };
            // Re-installed afterwards so callers can inspect node gradients.
            let op = self.ops[i].clone();
            self.propagate(i, &op, &g, store)?;
            self.grads[i] = Some(g);
        }
        Ok(())
    }

    fn propagate(&mut self, out: usize, op: &Op, g: &Tensor, store: &mut ParamStore) -> Result<()> {
        match op {
            Op::Leaf => {}
            Op::Param(name) => store.accumulate_grad(name, g)?,
            Op::Matmul(a, b) => {
                let (n, k) = (self.vals[a.0 as usize].rows(), self.vals[a.0 as usize].cols());
                let m = self.vals[b.0 as usize].cols();
                let (av, bv) = (self.vals[a.0 as usize].clone(), self.vals[b.0 as usize].clone());
                gemm_nt(n, m, k, g.data(), bv.data(), self.grad_buf(*a).data_mut());
                gemm_tn(k, n, m, av.data(), g.data(), self.grad_buf(*b).data_mut());
            }
            Op::AddBias(a, bias) => {
                let (n, m) = (self.vals[a.0 as usize].rows(), self.vals[a.0 as usize].cols());
                self.acc(*a, g.data());
                let gb = self.grad_buf(*bias);
                for i in 0..n {
                    for j in 0..m {
                        gb.data_mut()[j] += g.data()[i * m + j];
                    }
                }
            }
            Op::Add(a, b) => {
                self.acc(*a, g.data());
                self.acc(*b, g.data());
            }
            Op::Sub(a, b) => {
                self.acc(*a, g.data());
                let gb = self.grad_buf(*b);
                for (o, gv) in gb.data_mut().iter_mut().zip(g.data()) {
                    *o -= gv;
                }
            }
            Op::Mul(a, b) => {
                let av = self.vals[a.0 as usize].clone();
                let bv = self.vals[b.0 as usize].clone();
                self.acc_scaled(*a, g.data(), bv.data());
                self.acc_scaled(*b, g.data(), av.data());
            }
            Op::Scale(a, c) => {
                let gb = self.grad_buf(*a);
                for (o, gv) in gb.data_mut().iter_mut().zip(g.data()) {
                    *o += c * gv;
                }
            }
            Op::AddScalar(a) => self.acc(*a, g.data()),
            Op::Relu(a) => {
                let av = self.vals[a.0 as usize].clone();
                let gb = self.grad_buf(*a);
                for ((o, gv), &xv) in gb.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                    if xv > 0.0 {
                        *o += gv;
                    }
                }
            }
            Op::Tanh(a) => {
                let tv = self.vals[out].clone();
                let gb = self.grad_buf(*a);
                for ((o, gv), &t) in gb.data_mut().iter_mut().zip(g.data()).zip(tv.data()) {
                    *o += gv * (1.0 - t * t);
                }
            }
            Op::Sigmoid(a) => {
                let sv = self.vals[out].clone();
                let gb = self.grad_buf(*a);
                for ((o, gv), &s) in gb.data_mut().iter_mut().zip(g.data()).zip(sv.data()) {
                    *o += gv * s * (1.0 - s);
                }
            }
            Op::Softplus(a) => {
                let av = self.vals[a.0 as usize].clone();
                let gb = self.grad_buf(*a);
                for ((o, gv), &xv) in gb.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                    *o += gv * sigmoid(xv);
                }
            }
            Op::ConcatCols(parts) => {
                let n = self.vals[parts[0].0 as usize].rows();
                let total = g.cols();
                let widths: Vec<usize> =
                    parts.iter().map(|p| self.vals[p.0 as usize].cols()).collect();
                let mut off = 0;
                for (&p, &m) in parts.iter().zip(&widths) {
                    let gp = self.grad_buf(p);
                    for i in 0..n {
                        for j in 0..m {
                            gp.data_mut()[i * m + j] += g.data()[i * total + off + j];
                        }
                    }
                    off += m;
                }
            }
            Op::RowMix { a, b, mask } => {
                let mv = self.vals[mask.0 as usize].clone();
                let m = self.vals[a.0 as usize].cols();
                {
                    let ga = self.grad_buf(*a);
                    for (i, &w) in mv.data().iter().enumerate() {
                        for j in 0..m {
                            ga.data_mut()[i * m + j] += w * g.data()[i * m + j];
                        }
                    }
                }
                let gb = self.grad_buf(*b);
                for (i, &w) in mv.data().iter().enumerate() {
                    for j in 0..m {
                        gb.data_mut()[i * m + j] += (1.0 - w) * g.data()[i * m + j];
                    }
                }
            }
            Op::GaussianNll { x, mean, std } => {
                let gs = g.data()[0];
                let xv = self.vals[x.0 as usize].clone();
                let mv = self.vals[mean.0 as usize].clone();
                let sv = self.vals[std.0 as usize].clone();
                {
                    let gm = self.grad_buf(*mean);
                    for i in 0..xv.len() {
                        let s2 = sv.data()[i] * sv.data()[i];
                        gm.data_mut()[i] += gs * (mv.data()[i] - xv.data()[i]) / s2;
                    }
                }
                {
                    let gsd = self.grad_buf(*std);
                    for i in 0..xv.len() {
                        let s = sv.data()[i];
                        let d = xv.data()[i] - mv.data()[i];
                        gsd.data_mut()[i] += gs * (1.0 / s - d * d / (s * s * s));
                    }
                }
                let gx = self.grad_buf(*x);
                for i in 0..xv.len() {
                    let s2 = sv.data()[i] * sv.data()[i];
                    gx.data_mut()[i] += gs * (xv.data()[i] - mv.data()[i]) / s2;
                }
            }
            Op::BernoulliNll { y, logits } => {
                let gs = g.data()[0];
                let yv = self.vals[y.0 as usize].clone();
                let lv = self.vals[logits.0 as usize].clone();
                {
                    let gl = self.grad_buf(*logits);
                    for i in 0..yv.len() {
                        gl.data_mut()[i] += gs * (sigmoid(lv.data()[i]) - yv.data()[i]);
                    }
                }
                let gy = self.grad_buf(*y);
                for i in 0..yv.len() {
                    gy.data_mut()[i] -= gs * lv.data()[i];
                }
            }
            Op::KlDiag { mq, sq, mp, sp } => {
                let gs = g.data()[0];
                let mqv = self.vals[mq.0 as usize].clone();
                let sqv = self.vals[sq.0 as usize].clone();
                let mpv = self.vals[mp.0 as usize].clone();
                let spv = self.vals[sp.0 as usize].clone();
                let n = mqv.len();
                {
                    let gmq = self.grad_buf(*mq);
                    for i in 0..n {
                        let sp2 = spv.data()[i] * spv.data()[i];
                        gmq.data_mut()[i] += gs * (mqv.data()[i] - mpv.data()[i]) / sp2;
                    }
                }
                {
                    let gsq = self.grad_buf(*sq);
                    for i in 0..n {
                        let sp2 = spv.data()[i] * spv.data()[i];
                        gsq.data_mut()[i] += gs * (sqv.data()[i] / sp2 - 1.0 / sqv.data()[i]);
                    }
                }
                {
                    let gmp = self.grad_buf(*mp);
                    for i in 0..n {
                        let sp2 = spv.data()[i] * spv.data()[i];
                        gmp.data_mut()[i] -= gs * (mqv.data()[i] - mpv.data()[i]) / sp2;
                    }
                }
                let gsp = self.grad_buf(*sp);
                for i in 0..n {
                    let s = spv.data()[i];
                    let d = mqv.data()[i] - mpv.data()[i];
                    let a = sqv.data()[i] * sqv.data()[i] + d * d;
                    gsp.data_mut()[i] += gs * (1.0 / s - a / (s * s * s));
                }
            }
            Op::Sum(a) => {
                let gs = g.data()[0];
                let ga = self.grad_buf(*a);
                for o in ga.data_mut() {
                    *o += gs;
                }
            }
        }
        Ok(())
    }

    fn zip(&self, a: NodeId, b: NodeId, what: &str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !ta.same_shape(tb) {
            return Err(Error::dim(what, format!("{:?}", ta.shape()), format!("{:?}", tb.shape())));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Ok(Tensor::new(ta.shape().to_vec(), data).expect("shape preserved"))
    }

    fn map(&self, a: NodeId, f: impl Fn(f64) -> f64) -> Tensor {
        let ta = self.value(a);
        let data = ta.data().iter().map(|&x| f(x)).collect();
        Tensor::new(ta.shape().to_vec(), data).expect("shape preserved")
    }

    fn grad_buf(&mut self, id: NodeId) -> &mut Tensor {
        let slot = &mut self.grads[id.0 as usize];
        if slot.is_none() {
            let shape = self.vals[id.0 as usize].shape().to_vec();
            *slot = Some(Tensor::zeros(shape));
        }
        slot.as_mut().unwrap()
    }

    fn acc(&mut self, id: NodeId, g: &[f64]) {
        let gb = self.grad_buf(id);
        for (o, gv) in gb.data_mut().iter_mut().zip(g) {
            *o += gv;
        }
    }

    fn acc_scaled(&mut self, id: NodeId, g: &[f64], scale: &[f64]) {
        let gb = self.grad_buf(id);
        for ((o, gv), sv) in gb.data_mut().iter_mut().zip(g).zip(scale) {
            *o += gv * sv;
        }
    }
}

// ─── dense gemm kernels (matrixmultiply wrappers, row-major) ───

/// `c += a[n,k] * b[k,m]`
fn gemm_nn(n: usize, k: usize, m: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), k * m);
    debug_assert_eq!(c.len(), n * m);
    unsafe {
        matrixmultiply::dgemm(
            n, k, m, 1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), m as isize, 1,
            1.0,
            c.as_mut_ptr(), m as isize, 1,
        );
    }
}

/// `c += a[n,m] * b[k,m]^T`  (i.e. grad_a += grad_out * b^T)
fn gemm_nt(n: usize, m: usize, k: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert_eq!(a.len(), n * m);
    debug_assert_eq!(b.len(), k * m);
    debug_assert_eq!(c.len(), n * k);
    unsafe {
        matrixmultiply::dgemm(
            n, m, k, 1.0,
            a.as_ptr(), m as isize, 1,
            b.as_ptr(), 1, m as isize,
            1.0,
            c.as_mut_ptr(), k as isize, 1,
        );
    }
}

/// `c += a[n,k]^T * b[n,m]`  (i.e. grad_b += a^T * grad_out)
fn gemm_tn(k: usize, n: usize, m: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), n * m);
    debug_assert_eq!(c.len(), k * m);
    unsafe {
        matrixmultiply::dgemm(
            k, n, m, 1.0,
            a.as_ptr(), 1, k as isize,
            b.as_ptr(), m as isize, 1,
            1.0,
            c.as_mut_ptr(), m as isize, 1,
        );
    }
}

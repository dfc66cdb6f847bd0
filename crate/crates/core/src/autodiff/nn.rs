use std::collections::BTreeMap;

use rand::Rng;

use super::tape::{NodeId, Tape};
use super::tensor::Tensor;
use crate::{Error, Result};

/// Lower bound added to every softplus-parameterized stddev so likelihoods
/// stay finite no matter what the raw head emits.
pub const STD_FLOOR: f64 = 1e-4;

pub(crate) struct Entry {
    pub value: Tensor,
    pub grad: Tensor,
    pub grad_set: bool,
    pub m: Tensor,
    pub v: Tensor,
}

/// Named parameter storage: values, gradient slots, and Adam moments, keyed
/// by dotted path (`"enc.q1.l0.w"`). A `BTreeMap` keeps iteration order — and
/// with it checkpoints and update sweeps — deterministic.
#[derive(Default)]
pub struct ParamStore {
    pub(crate) entries: BTreeMap<String, Entry>,
    pub(crate) step: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a fresh parameter. Gradient and moments start at zero.
    pub fn insert(&mut self, name: &str, value: Tensor) -> Result<()> {
        if self.entries.contains_key(name) {
            return Err(Error::Usage(format!("parameter {name:?} registered twice")));
        }
        let shape = value.shape().to_vec();
        self.entries.insert(
            name.to_string(),
            Entry {
                value,
                grad: Tensor::zeros(shape.clone()),
                grad_set: false,
                m: Tensor::zeros(shape.clone()),
                v: Tensor::zeros(shape),
            },
        );
        Ok(())
    }

    pub fn value(&self, name: &str) -> Result<&Tensor> {
        self.entries
            .get(name)
            .map(|e| &e.value)
            .ok_or_else(|| Error::Usage(format!("unknown parameter {name:?}")))
    }

    /// Overwrite a parameter's value, keeping shape. Intended for tests
    /// (finite-difference probes) and checkpoint restore.
    pub fn set_value(&mut self, name: &str, value: Tensor) -> Result<()> {
        let e = self
            .entries
            .get_mut(name)
            .ok_or_else(|| Error::Usage(format!("unknown parameter {name:?}")))?;
        if !e.value.same_shape(&value) {
            return Err(Error::dim(
                format!("set_value({name})"),
                format!("{:?}", e.value.shape()),
                format!("{:?}", value.shape()),
            ));
        }
        e.value = value;
        Ok(())
    }

    pub fn grad(&self, name: &str) -> Result<&Tensor> {
        self.entries
            .get(name)
            .map(|e| &e.grad)
            .ok_or_else(|| Error::Usage(format!("unknown parameter {name:?}")))
    }

    pub(crate) fn accumulate_grad(&mut self, name: &str, g: &Tensor) -> Result<()> {
        let e = self
            .entries
            .get_mut(name)
            .ok_or_else(|| Error::Usage(format!("gradient for unknown parameter {name:?}")))?;
        for (o, gv) in e.grad.data_mut().iter_mut().zip(g.data()) {
            *o += gv;
        }
        e.grad_set = true;
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for e in self.entries.values_mut() {
            e.grad.data_mut().fill(0.0);
            e.grad_set = false;
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter_values(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), &e.value))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of optimizer steps taken on this store.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Total element count across all parameters.
    pub fn num_elements(&self) -> usize {
        self.entries.values().map(|e| e.value.len()).sum()
    }
}

/// Glorot/Xavier uniform draw for a `[fan_in, fan_out]` weight matrix:
/// elements uniform in `±sqrt(6 / (fan_in + fan_out))`, row-major draw order.
pub fn glorot_init(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Tensor {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-a..a)).collect();
    Tensor::new(vec![fan_in, fan_out], data).expect("consistent shape")
}

fn init_linear(
    store: &mut ParamStore,
    prefix: &str,
    fan_in: usize,
    fan_out: usize,
    rng: &mut impl Rng,
) -> Result<()> {
    store.insert(&format!("{prefix}.w"), glorot_init(fan_in, fan_out, rng))?;
    store.insert(&format!("{prefix}.b"), Tensor::zeros(vec![fan_out]))
}

fn linear_forward(
    tape: &mut Tape,
    store: &ParamStore,
    prefix: &str,
    x: NodeId,
) -> Result<NodeId> {
    let w = tape.param(store, &format!("{prefix}.w"))?;
    let b = tape.param(store, &format!("{prefix}.b"))?;
    let xw = tape.matmul(x, w)?;
    tape.add_bias(xw, b)
}

/// Fully connected trunk: `layers` hidden layers of width `hidden`, ReLU
/// after each. Parameters live in a [`ParamStore`] under
/// `{prefix}.l{i}.{w,b}`; the struct itself is just the wiring.
#[derive(Debug, Clone)]
pub struct Mlp {
    prefix: String,
    input_dim: usize,
    hidden: usize,
    layers: usize,
}

impl Mlp {
    pub fn init(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        layers: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if layers == 0 || hidden == 0 || input_dim == 0 {
            return Err(Error::Config(format!(
                "mlp {prefix}: input_dim {input_dim}, hidden {hidden}, layers {layers} must all be positive"
            )));
        }
        let mut fan_in = input_dim;
        for i in 0..layers {
            init_linear(store, &format!("{prefix}.l{i}"), fan_in, hidden, rng)?;
            fan_in = hidden;
        }
        Ok(Mlp { prefix: prefix.to_string(), input_dim, hidden, layers })
    }

    /// Rebuild the wiring for parameters that already exist in a store
    /// (checkpoint restore).
    pub fn attach(prefix: &str, input_dim: usize, hidden: usize, layers: usize) -> Self {
        Mlp { prefix: prefix.to_string(), input_dim, hidden, layers }
    }

    pub fn out_dim(&self) -> usize {
        self.hidden
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        if tape.value(x).cols() != self.input_dim {
            return Err(Error::dim(
                format!("{} forward", self.prefix),
                format!("[n,{}] input", self.input_dim),
                format!("{:?}", tape.value(x).shape()),
            ));
        }
        let mut h = x;
        for i in 0..self.layers {
            h = linear_forward(tape, store, &format!("{}.l{i}", self.prefix), h)?;
            h = tape.relu(h);
        }
        Ok(h)
    }
}

/// Linear readout `{prefix}.{w,b}`; used directly for Bernoulli logits and as
/// a building block of [`GaussianHead`].
#[derive(Debug, Clone)]
pub struct LinearHead {
    prefix: String,
    out_dim: usize,
}

impl LinearHead {
    pub fn init(
        store: &mut ParamStore,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        init_linear(store, prefix, in_dim, out_dim, rng)?;
        Ok(LinearHead { prefix: prefix.to_string(), out_dim })
    }

    pub fn attach(prefix: &str, out_dim: usize) -> Self {
        LinearHead { prefix: prefix.to_string(), out_dim }
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, h: NodeId) -> Result<NodeId> {
        linear_forward(tape, store, &self.prefix, h)
    }
}

/// Gaussian readout: a mean head and a raw-stddev head
/// (`{prefix}.mean.{w,b}`, `{prefix}.std.{w,b}`), with
/// `std = softplus(raw) + STD_FLOOR` so stddevs are strictly positive.
#[derive(Debug, Clone)]
pub struct GaussianHead {
    mean: LinearHead,
    std: LinearHead,
}

impl GaussianHead {
    pub fn init(
        store: &mut ParamStore,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        Ok(GaussianHead {
            mean: LinearHead::init(store, &format!("{prefix}.mean"), in_dim, out_dim, rng)?,
            std: LinearHead::init(store, &format!("{prefix}.std"), in_dim, out_dim, rng)?,
        })
    }

    pub fn attach(prefix: &str, out_dim: usize) -> Self {
        GaussianHead {
            mean: LinearHead::attach(&format!("{prefix}.mean"), out_dim),
            std: LinearHead::attach(&format!("{prefix}.std"), out_dim),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.mean.out_dim()
    }

    /// `(mean, std)` nodes, both `[n, out_dim]`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        h: NodeId,
    ) -> Result<(NodeId, NodeId)> {
        let mean = self.mean.forward(tape, store, h)?;
        let raw = self.std.forward(tape, store, h)?;
        let sp = tape.softplus(raw);
        let std = tape.add_scalar(sp, STD_FLOOR);
        Ok((mean, std))
    }
}

/// Trunk + Gaussian head in one call; returns `(mean, std)`.
pub fn normal_head_forward(
    tape: &mut Tape,
    store: &ParamStore,
    trunk: &Mlp,
    head: &GaussianHead,
    x: NodeId,
) -> Result<(NodeId, NodeId)> {
    let h = trunk.forward(tape, store, x)?;
    head.forward(tape, store, h)
}

#[cfg(test)]
mod tests {
    use super::super::tape::Tape;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn glorot_bounds_and_zero_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = glorot_init(30, 20, &mut rng);
        let a = (6.0f64 / 50.0).sqrt();
        assert!(w.data().iter().all(|&v| v > -a && v < a));
        // not degenerate
        assert!(w.data().iter().any(|&v| v.abs() > a * 0.5));

        let mut store = ParamStore::new();
        let _ = Mlp::init(&mut store, "m", 4, 8, 2, &mut rng).unwrap();
        assert!(store.value("m.l0.b").unwrap().data().iter().all(|&v| v == 0.0));
        assert_eq!(store.value("m.l0.w").unwrap().shape(), &[4, 8]);
        assert_eq!(store.value("m.l1.w").unwrap().shape(), &[8, 8]);
    }

    #[test]
    fn duplicate_parameter_is_an_error() {
        let mut store = ParamStore::new();
        store.insert("p", Tensor::zeros(vec![2])).unwrap();
        assert!(matches!(
            store.insert("p", Tensor::zeros(vec![2])),
            Err(crate::Error::Usage(_))
        ));
    }

    #[test]
    fn gaussian_head_with_zeroed_params_outputs_bias_and_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = ParamStore::new();
        let head = GaussianHead::init(&mut store, "h", 3, 2, &mut rng).unwrap();
        for name in ["h.mean.w", "h.std.w"] {
            let shape = store.value(name).unwrap().shape().to_vec();
            store.set_value(name, Tensor::zeros(shape)).unwrap();
        }
        store.set_value("h.mean.b", Tensor::new(vec![2], vec![4.5, -1.25]).unwrap()).unwrap();

        let mut tape = Tape::new();
        let x = tape.constant(Tensor::from_rows(&[vec![9.0, 9.0, 9.0], vec![0.0, 1.0, 2.0]]).unwrap());
        let (mean, std) = head.forward(&mut tape, &store, x).unwrap();
        // zero weights: mean is the bias for every input row
        assert_eq!(tape.value(mean).row(0), &[4.5, -1.25]);
        assert_eq!(tape.value(mean).row(1), &[4.5, -1.25]);
        // zero raw-std head: softplus(0) + floor
        let expect = 2.0f64.ln() + STD_FLOOR;
        for &s in tape.value(std).data() {
            assert!((s - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn mlp_rejects_wrong_input_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        let mlp = Mlp::init(&mut store, "m", 3, 4, 1, &mut rng).unwrap();
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(vec![2, 5]));
        assert!(matches!(mlp.forward(&mut tape, &store, x), Err(crate::Error::Dim { .. })));
    }
}

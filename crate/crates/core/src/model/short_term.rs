//! Stage 1: the short-term potential-outcome estimator. A shared trunk with
//! one Gaussian head per treatment arm, fitted by maximum likelihood on
//! experimental data only, where treatment is randomized given x.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::Hyperparams;
use super::scaler::Standardizer;
use crate::autodiff::{
    adam_step, AdamConfig, GaussianHead, Mlp, ParamStore, Tape, Tensor,
};
use crate::data::{Dataset, Group};
use crate::{Error, Result};
use rand::seq::SliceRandom;

#[derive(Debug, Clone)]
pub struct ShortTermNet {
    pub(crate) store: ParamStore,
    trunk: Mlp,
    head0: GaussianHead,
    head1: GaussianHead,
    pub(crate) scaler_x: Standardizer,
    pub(crate) scaler_s: Standardizer,
    /// Mean per-unit negative log-likelihood per epoch.
    pub trace: Vec<f64>,
}

/// Fit the stage-1 network on experimental records.
pub fn train_short_term(exp: &Dataset, hp: &Hyperparams) -> Result<ShortTermNet> {
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    ShortTermNet::fit(exp, hp, &mut rng)
}

impl ShortTermNet {
    pub(crate) fn fit(
        exp: &Dataset,
        hp: &Hyperparams,
        rng: &mut ChaCha8Rng,
    ) -> Result<ShortTermNet> {
        hp.validate()?;
        if exp.records().iter().any(|r| r.g != Group::Experimental) {
            return Err(Error::Usage(
                "stage 1 trains on experimental records only".into(),
            ));
        }
        let n = exp.len();
        let has0 = exp.records().iter().any(|r| r.w == 0);
        let has1 = exp.records().iter().any(|r| r.w == 1);
        if !has0 || !has1 {
            return Err(Error::Training(format!(
                "experimental data covers a single treatment arm (w=0: {has0}, w=1: {has1}); both are required"
            )));
        }

        let all: Vec<usize> = (0..n).collect();
        let x_raw = exp.x_matrix(&all);
        let s_raw = exp.s_matrix(&all);
        let (scaler_x, scaler_s) = if hp.standardize {
            (Standardizer::fit(&x_raw), Standardizer::fit(&s_raw))
        } else {
            (Standardizer::identity(exp.d_x()), Standardizer::identity(exp.d_s()))
        };
        let x_std = scaler_x.transform(&x_raw)?;
        let s_std = scaler_s.transform(&s_raw)?;
        let w_mask = exp.w_vector(&all);

        let mut store = ParamStore::new();
        let trunk = Mlp::init(&mut store, "st.trunk", exp.d_x(), hp.hidden_width, hp.n_layers, rng)?;
        let head0 = GaussianHead::init(&mut store, "st.head0", hp.hidden_width, exp.d_s(), rng)?;
        let head1 = GaussianHead::init(&mut store, "st.head1", hp.hidden_width, exp.d_s(), rng)?;

        let adam = AdamConfig::with_lr(hp.learning_rate);
        let mut trace = Vec::with_capacity(hp.epochs);
        let mut order: Vec<usize> = (0..n).collect();
        for _epoch in 0..hp.epochs {
            order.shuffle(rng);
            let mut epoch_nll = 0.0;
            for chunk in order.chunks(hp.batch_size) {
                let mut tape = Tape::new();
                let xb = tape.constant(x_std.gather_rows(chunk));
                let sb = tape.constant(s_std.gather_rows(chunk));
                let wb = tape.constant(w_mask.gather_rows(chunk));
                let h = trunk.forward(&mut tape, &store, xb)?;
                let (m0, sd0) = head0.forward(&mut tape, &store, h)?;
                let (m1, sd1) = head1.forward(&mut tape, &store, h)?;
                let mu = tape.row_mix(m1, m0, wb)?;
                let sd = tape.row_mix(sd1, sd0, wb)?;
                let nll = tape.gaussian_nll(sb, mu, sd)?;
                let loss = tape.scale(nll, 1.0 / chunk.len() as f64);
                tape.backward(loss, &mut store)?;
                adam_step(&mut store, &adam)?;
                epoch_nll += tape.value(nll).item()?;
            }
            trace.push(epoch_nll / n as f64);
        }

        Ok(ShortTermNet { store, trunk, head0, head1, scaler_x, scaler_s, trace })
    }

    /// Rebuild wiring around a restored store.
    pub(crate) fn attach(
        store: ParamStore,
        d_x: usize,
        d_s: usize,
        hp: &Hyperparams,
        scaler_x: Standardizer,
        scaler_s: Standardizer,
        trace: Vec<f64>,
    ) -> ShortTermNet {
        ShortTermNet {
            store,
            trunk: Mlp::attach("st.trunk", d_x, hp.hidden_width, hp.n_layers),
            head0: GaussianHead::attach("st.head0", d_s),
            head1: GaussianHead::attach("st.head1", d_s),
            scaler_x,
            scaler_s,
            trace,
        }
    }

    /// Both arms' predicted short-term means for raw-scale covariates
    /// `[n, d_x]`; returns raw-scale `(s0_hat, s1_hat)`, each `[n, d_s]`.
    /// Valid on observational units because the experiment transports.
    pub fn predict_potential_s(&self, x_raw: &Tensor) -> Result<(Tensor, Tensor)> {
        let x_std = self.scaler_x.transform(x_raw)?;
        let mut tape = Tape::new();
        let xb = tape.constant(x_std);
        let h = self.trunk.forward(&mut tape, &self.store, xb)?;
        let (m0, _) = self.head0.forward(&mut tape, &self.store, h)?;
        let (m1, _) = self.head1.forward(&mut tape, &self.store, h)?;
        let s0 = self.scaler_s.inverse(tape.value(m0))?;
        let s1 = self.scaler_s.inverse(tape.value(m1))?;
        Ok((s0, s1))
    }

    pub fn d_x(&self) -> usize {
        self.scaler_x.dim()
    }

    pub fn d_s(&self) -> usize {
        self.scaler_s.dim()
    }
}

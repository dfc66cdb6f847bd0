//! Stage 2: the identifiable variational autoencoder. The posterior over
//! the latent confounder is a two-branch mixture selected by treatment; the
//! prior is conditioned on the auxiliary category; decoders reconstruct
//! covariates, treatment, and the observed short-term outcome; a separate
//! head predicts the long-term outcome from sampled latents.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::Hyperparams;
use super::scaler::Standardizer;
use crate::autodiff::{GaussianHead, LinearHead, Mlp, NodeId, ParamStore, Tape, Tensor};
use crate::data::{Dataset, Group};
use crate::{Error, Result};

/// What the networks need to know about the data: dimensions, the auxiliary
/// level table (defining the one-hot layout), and which covariate columns
/// are binary (reconstructed with Bernoulli rather than Gaussian heads).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub d_x: usize,
    pub d_s: usize,
    pub d_z: usize,
    pub u_levels: Vec<u32>,
    pub bern_x_cols: Vec<usize>,
}

impl Schema {
    pub fn detect(obs: &Dataset, exp: &Dataset, d_z: usize) -> Result<Schema> {
        if obs.d_x() != exp.d_x() || obs.d_s() != exp.d_s() {
            return Err(Error::dim(
                "schema",
                format!("matching dims (d_x {}, d_s {})", obs.d_x(), obs.d_s()),
                format!("experimental d_x {}, d_s {}", exp.d_x(), exp.d_s()),
            ));
        }
        let mut u_levels: Vec<u32> = obs
            .records()
            .iter()
            .chain(exp.records())
            .map(|r| r.u)
            .collect();
        u_levels.sort_unstable();
        u_levels.dedup();

        let bern_x_cols: Vec<usize> = (0..obs.d_x())
            .filter(|&j| {
                obs.records()
                    .iter()
                    .chain(exp.records())
                    .all(|r| r.x[j] == 0.0 || r.x[j] == 1.0)
            })
            .collect();

        Ok(Schema { d_x: obs.d_x(), d_s: obs.d_s(), d_z, u_levels, bern_x_cols })
    }

    pub fn d_u(&self) -> usize {
        self.u_levels.len()
    }

    pub fn gauss_x_cols(&self) -> Vec<usize> {
        (0..self.d_x).filter(|j| !self.bern_x_cols.contains(j)).collect()
    }

    /// One-hot a single auxiliary code against the level table.
    pub fn onehot(&self, u: u32) -> Result<Vec<f64>> {
        let pos = self
            .u_levels
            .iter()
            .position(|&l| l == u)
            .ok_or_else(|| Error::Domain(format!("u = {u} not in level table {:?}", self.u_levels)))?;
        let mut v = vec![0.0; self.d_u()];
        v[pos] = 1.0;
        Ok(v)
    }
}

/// One observational mini-batch, standardized and ready for the tape.
#[derive(Debug, Clone)]
pub struct ObsBatch {
    pub x: Tensor,
    pub x_gauss: Option<Tensor>,
    pub x_bern: Option<Tensor>,
    pub w_mask: Tensor,
    pub w_col: Tensor,
    pub s: Tensor,
    pub s0_hat: Tensor,
    pub s1_hat: Tensor,
    pub u: Tensor,
    pub y: Tensor,
}

impl ObsBatch {
    /// Assemble a batch from observational units. `s0_hat_raw`/`s1_hat_raw`
    /// are the stage-1 potential estimates for exactly these units, raw
    /// scale, in the same row order as `idx`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ds: &Dataset,
        idx: &[usize],
        schema: &Schema,
        scaler_x: &Standardizer,
        scaler_s: &Standardizer,
        scaler_y: &Standardizer,
        s0_hat_raw: &Tensor,
        s1_hat_raw: &Tensor,
    ) -> Result<ObsBatch> {
        if let Some(&bad) = idx.iter().find(|&&i| ds.records()[i].g != Group::Observational) {
            return Err(Error::Usage(format!(
                "variational stage consumes observational units only; record {bad} is experimental"
            )));
        }
        let x_raw = ds.x_matrix(idx);
        let x = scaler_x.transform(&x_raw)?;
        let gauss = schema.gauss_x_cols();
        let x_gauss = (!gauss.is_empty()).then(|| x.select_cols(&gauss));
        let x_bern = (!schema.bern_x_cols.is_empty()).then(|| x.select_cols(&schema.bern_x_cols));
        Ok(ObsBatch {
            x,
            x_gauss,
            x_bern,
            w_mask: ds.w_vector(idx),
            w_col: ds.w_column(idx),
            s: scaler_s.transform(&ds.s_matrix(idx))?,
            s0_hat: scaler_s.transform(s0_hat_raw)?,
            s1_hat: scaler_s.transform(s1_hat_raw)?,
            u: ds.u_onehot(idx, &schema.u_levels)?,
            y: scaler_y.transform(&ds.y_column(idx)?)?,
        })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }
}

/// The scalar loss nodes produced by one ELBO evaluation. All three are
/// sums over the batch; `z_samples` are the reparameterized draws, shared
/// with the outcome loss.
pub struct ElboParts {
    pub neg_elbo: NodeId,
    pub kl: NodeId,
    pub recon: NodeId,
    pub z_samples: Vec<NodeId>,
}

/// Wiring for every stage-2 network. Parameters live in one store so a
/// single optimizer step updates them jointly.
#[derive(Debug, Clone)]
pub struct VaeNets {
    enc0_trunk: Mlp,
    enc0_head: GaussianHead,
    enc1_trunk: Mlp,
    enc1_head: GaussianHead,
    prior_trunk: Mlp,
    prior_head: GaussianHead,
    dec_x_trunk: Mlp,
    dec_x_gauss: Option<GaussianHead>,
    dec_x_bern: Option<LinearHead>,
    dec_w_trunk: Mlp,
    dec_w_head: LinearHead,
    dec_s_trunk: Mlp,
    dec_s_head: GaussianHead,
    out_trunk: Mlp,
    out_head: GaussianHead,
    use_observed_s: bool,
    d_z: usize,
}

impl VaeNets {
    pub fn init(
        store: &mut ParamStore,
        schema: &Schema,
        hp: &Hyperparams,
        rng: &mut impl Rng,
    ) -> Result<VaeNets> {
        let (d_x, d_s, d_z, d_u) = (schema.d_x, schema.d_s, schema.d_z, schema.d_u());
        let (h, l) = (hp.hidden_width, hp.n_layers);
        let n_gauss = schema.gauss_x_cols().len();
        let n_bern = schema.bern_x_cols.len();

        let enc_in = d_x + d_s + d_u;
        let enc0_trunk = Mlp::init(store, "enc0.trunk", enc_in, h, l, rng)?;
        let enc0_head = GaussianHead::init(store, "enc0.head", h, d_z, rng)?;
        let enc1_trunk = Mlp::init(store, "enc1.trunk", enc_in, h, l, rng)?;
        let enc1_head = GaussianHead::init(store, "enc1.head", h, d_z, rng)?;
        let prior_trunk = Mlp::init(store, "prior.trunk", d_u, h, l, rng)?;
        let prior_head = GaussianHead::init(store, "prior.head", h, d_z, rng)?;
        let dec_x_trunk = Mlp::init(store, "dec_x.trunk", d_z + d_u, h, l, rng)?;
        let dec_x_gauss = (n_gauss > 0)
            .then(|| GaussianHead::init(store, "dec_x.gauss", h, n_gauss, rng))
            .transpose()?;
        let dec_x_bern = (n_bern > 0)
            .then(|| LinearHead::init(store, "dec_x.bern", h, n_bern, rng))
            .transpose()?;
        let dec_w_trunk = Mlp::init(store, "dec_w.trunk", d_x + d_z, h, l, rng)?;
        let dec_w_head = LinearHead::init(store, "dec_w.head", h, 1, rng)?;
        let dec_s_trunk = Mlp::init(store, "dec_s.trunk", 1 + d_x + d_z, h, l, rng)?;
        let dec_s_head = GaussianHead::init(store, "dec_s.head", h, d_s, rng)?;
        let out_trunk = Mlp::init(store, "out.trunk", 1 + d_s + d_x + d_z, h, l, rng)?;
        let out_head = GaussianHead::init(store, "out.head", h, 1, rng)?;

        Ok(VaeNets {
            enc0_trunk,
            enc0_head,
            enc1_trunk,
            enc1_head,
            prior_trunk,
            prior_head,
            dec_x_trunk,
            dec_x_gauss,
            dec_x_bern,
            dec_w_trunk,
            dec_w_head,
            dec_s_trunk,
            dec_s_head,
            out_trunk,
            out_head,
            use_observed_s: hp.use_observed_s,
            d_z,
        })
    }

    /// Rebuild wiring around a restored store.
    pub fn attach(schema: &Schema, hp: &Hyperparams) -> VaeNets {
        let (d_x, d_s, d_z, d_u) = (schema.d_x, schema.d_s, schema.d_z, schema.d_u());
        let (h, l) = (hp.hidden_width, hp.n_layers);
        let n_gauss = schema.gauss_x_cols().len();
        let n_bern = schema.bern_x_cols.len();
        VaeNets {
            enc0_trunk: Mlp::attach("enc0.trunk", d_x + d_s + d_u, h, l),
            enc0_head: GaussianHead::attach("enc0.head", d_z),
            enc1_trunk: Mlp::attach("enc1.trunk", d_x + d_s + d_u, h, l),
            enc1_head: GaussianHead::attach("enc1.head", d_z),
            prior_trunk: Mlp::attach("prior.trunk", d_u, h, l),
            prior_head: GaussianHead::attach("prior.head", d_z),
            dec_x_trunk: Mlp::attach("dec_x.trunk", d_z + d_u, h, l),
            dec_x_gauss: (n_gauss > 0).then(|| GaussianHead::attach("dec_x.gauss", n_gauss)),
            dec_x_bern: (n_bern > 0).then(|| LinearHead::attach("dec_x.bern", n_bern)),
            dec_w_trunk: Mlp::attach("dec_w.trunk", d_x + d_z, h, l),
            dec_w_head: LinearHead::attach("dec_w.head", 1),
            dec_s_trunk: Mlp::attach("dec_s.trunk", 1 + d_x + d_z, h, l),
            dec_s_head: GaussianHead::attach("dec_s.head", d_s),
            out_trunk: Mlp::attach("out.trunk", 1 + d_s + d_x + d_z, h, l),
            out_head: GaussianHead::attach("out.head", 1),
            use_observed_s: hp.use_observed_s,
            d_z,
        }
    }

    /// Mixture posterior parameters `(mean, std)` for a batch: both branch
    /// networks run on the full batch and each row keeps the branch chosen
    /// by its treatment.
    pub fn posterior_params(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        batch: &ObsBatch,
    ) -> Result<(NodeId, NodeId)> {
        let x = tape.constant(batch.x.clone());
        let w_mask = tape.constant(batch.w_mask.clone());
        let s = tape.constant(batch.s.clone());
        let s0h = tape.constant(batch.s0_hat.clone());
        let s1h = tape.constant(batch.s1_hat.clone());
        let u = tape.constant(batch.u.clone());

        let (s_for_0, s_for_1) = if self.use_observed_s {
            // the factual branch sees the observed value, the counterfactual
            // branch keeps the stage-1 estimate
            (tape.row_mix(s0h, s, w_mask)?, tape.row_mix(s, s1h, w_mask)?)
        } else {
            (s0h, s1h)
        };
        let in0 = tape.concat_cols(&[x, s_for_0, u])?;
        let in1 = tape.concat_cols(&[x, s_for_1, u])?;
        let h0 = self.enc0_trunk.forward(tape, store, in0)?;
        let (mu0, sd0) = self.enc0_head.forward(tape, store, h0)?;
        let h1 = self.enc1_trunk.forward(tape, store, in1)?;
        let (mu1, sd1) = self.enc1_head.forward(tape, store, h1)?;
        let mu_q = tape.row_mix(mu1, mu0, w_mask)?;
        let sd_q = tape.row_mix(sd1, sd0, w_mask)?;
        Ok((mu_q, sd_q))
    }

    /// Prior parameters `(mean, std)` from one-hot auxiliary rows.
    pub fn prior_params(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        u: NodeId,
    ) -> Result<(NodeId, NodeId)> {
        let h = self.prior_trunk.forward(tape, store, u)?;
        self.prior_head.forward(tape, store, h)
    }

    /// Outcome-head Gaussian parameters for explicit inputs (all
    /// standardized, `w` as a raw 0/1 column).
    pub fn outcome_params(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        w_col: NodeId,
        s: NodeId,
        x: NodeId,
        z: NodeId,
    ) -> Result<(NodeId, NodeId)> {
        let input = tape.concat_cols(&[w_col, s, x, z])?;
        let h = self.out_trunk.forward(tape, store, input)?;
        self.out_head.forward(tape, store, h)
    }

    /// Negative evidence lower bound for one observational batch: analytic
    /// KL between the selected posterior branch and the conditional prior,
    /// plus reconstruction negative log-likelihoods averaged over the given
    /// Monte-Carlo noise draws. All returned nodes are batch sums.
    pub fn elbo_batch(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        batch: &ObsBatch,
        mc_noise: &[Tensor],
    ) -> Result<ElboParts> {
        let n = batch.n();
        if mc_noise.is_empty() {
            return Err(Error::Usage("need at least one Monte-Carlo noise draw".into()));
        }
        for t in mc_noise {
            if t.shape() != [n, self.d_z] {
                return Err(Error::dim(
                    "mc noise",
                    format!("[{n}, {}]", self.d_z),
                    format!("{:?}", t.shape()),
                ));
            }
        }

        let (mu_q, sd_q) = self.posterior_params(tape, store, batch)?;
        let u = tape.constant(batch.u.clone());
        let (mu_p, sd_p) = self.prior_params(tape, store, u)?;
        let kl = tape.kl_diag(mu_q, sd_q, mu_p, sd_p)?;

        let x = tape.constant(batch.x.clone());
        let w_col = tape.constant(batch.w_col.clone());
        let s = tape.constant(batch.s.clone());

        let mut z_samples = Vec::with_capacity(mc_noise.len());
        let mut recon_acc: Option<NodeId> = None;
        for noise in mc_noise {
            let eps = tape.constant(noise.clone());
            let z = tape.reparam(mu_q, sd_q, eps)?;
            z_samples.push(z);

            let xin = tape.concat_cols(&[z, u])?;
            let hx = self.dec_x_trunk.forward(tape, store, xin)?;
            let mut terms = Vec::new();
            if let (Some(head), Some(xg)) = (&self.dec_x_gauss, &batch.x_gauss) {
                let tgt = tape.constant(xg.clone());
                let (mx, sx) = head.forward(tape, store, hx)?;
                terms.push(tape.gaussian_nll(tgt, mx, sx)?);
            }
            if let (Some(head), Some(xb)) = (&self.dec_x_bern, &batch.x_bern) {
                let tgt = tape.constant(xb.clone());
                let logits = head.forward(tape, store, hx)?;
                terms.push(tape.bernoulli_nll(tgt, logits)?);
            }

            let win = tape.concat_cols(&[x, z])?;
            let hw = self.dec_w_trunk.forward(tape, store, win)?;
            let wlogits = self.dec_w_head.forward(tape, store, hw)?;
            terms.push(tape.bernoulli_nll(w_col, wlogits)?);

            let sin = tape.concat_cols(&[w_col, x, z])?;
            let hs = self.dec_s_trunk.forward(tape, store, sin)?;
            let (ms, ss) = self.dec_s_head.forward(tape, store, hs)?;
            terms.push(tape.gaussian_nll(s, ms, ss)?);

            let mut draw = terms[0];
            for &t in &terms[1..] {
                draw = tape.add(draw, t)?;
            }
            recon_acc = Some(match recon_acc {
                Some(acc) => tape.add(acc, draw)?,
                None => draw,
            });
        }
        let recon = tape.scale(recon_acc.expect("at least one draw"), 1.0 / mc_noise.len() as f64);
        let neg_elbo = tape.add(kl, recon)?;
        Ok(ElboParts { neg_elbo, kl, recon, z_samples })
    }

    /// Negative log-likelihood of the observed long-term outcomes given the
    /// observed treatment, observed short-term outcome, covariates, and the
    /// same posterior draws the ELBO used; a batch sum, averaged over draws.
    pub fn outcome_loss(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        batch: &ObsBatch,
        z_samples: &[NodeId],
    ) -> Result<NodeId> {
        if z_samples.is_empty() {
            return Err(Error::Usage("outcome loss needs at least one posterior draw".into()));
        }
        let x = tape.constant(batch.x.clone());
        let w_col = tape.constant(batch.w_col.clone());
        let s = tape.constant(batch.s.clone());
        let y = tape.constant(batch.y.clone());
        let mut acc: Option<NodeId> = None;
        for &z in z_samples {
            let (my, sy) = self.outcome_params(tape, store, w_col, s, x, z)?;
            let nll = tape.gaussian_nll(y, my, sy)?;
            acc = Some(match acc {
                Some(a) => tape.add(a, nll)?,
                None => nll,
            });
        }
        Ok(tape.scale(acc.expect("at least one draw"), 1.0 / z_samples.len() as f64))
    }
}

/// The training objective is the sum of the three per-unit mean losses.
pub fn total_loss(neg_elbo: f64, l_s: f64, l_y: f64) -> f64 {
    neg_elbo + l_s + l_y
}

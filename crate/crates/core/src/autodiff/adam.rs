use super::nn::ParamStore;
use crate::{Error, Result};

/// Adam hyperparameters; defaults are the usual `beta1 = 0.9`,
/// `beta2 = 0.999`, `eps = 1e-8`.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig { lr, ..Default::default() }
    }
}

/// One bias-corrected Adam update over every parameter in `store`, in the
/// textbook form
///
/// ```text
/// m <- b1 m + (1-b1) g        v <- b2 v + (1-b2) g^2
/// theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// ```
///
/// Every parameter must have received a gradient since the last step (a
/// freshly zeroed slot counts only after `backward` actually reached it);
/// stepping with an untouched slot is almost always a wiring bug, so it is an
/// error rather than a silent no-op. Gradients are zeroed here, not by
/// `backward`, so several losses can accumulate into one update.
pub fn adam_step(store: &mut ParamStore, cfg: &AdamConfig) -> Result<()> {
    let t = store.step + 1;
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);

    for (name, e) in store.entries.iter_mut() {
        if !e.grad_set {
            return Err(Error::Usage(format!(
                "adam_step: parameter {name:?} has no gradient (backward never reached it)"
            )));
        }
        for i in 0..e.value.len() {
            let g = e.grad.data()[i];
            if !g.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite gradient for parameter {name:?}"
                )));
            }
            let m = cfg.beta1 * e.m.data()[i] + (1.0 - cfg.beta1) * g;
            let v = cfg.beta2 * e.v.data()[i] + (1.0 - cfg.beta2) * g * g;
            e.m.data_mut()[i] = m;
            e.v.data_mut()[i] = v;
            e.value.data_mut()[i] -= cfg.lr * (m / bc1) / ((v / bc2).sqrt() + cfg.eps);
        }
        e.grad.data_mut().fill(0.0);
        e.grad_set = false;
    }
    store.step = t;
    Ok(())
}

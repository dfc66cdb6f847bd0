//! Training configuration shared by both stages.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMode {
    /// Fit the short-term network first, freeze it, then fit the
    /// variational stage on observational data.
    #[default]
    TwoPhase,
    /// Every optimizer step pairs an experimental mini-batch gradient for
    /// the short-term loss with an observational mini-batch gradient for
    /// the variational and outcome losses.
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    /// Latent dimension; must be supplied (synthetic runs use the
    /// generator's true dimension).
    pub d_z: usize,
    #[serde(default = "default_hidden")]
    pub hidden_width: usize,
    #[serde(default = "default_layers")]
    pub n_layers: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Monte-Carlo draws per unit for the reconstruction term.
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default)]
    pub training_mode: TrainingMode,
    #[serde(default)]
    pub seed: u64,
    /// Feed the observed factual short-term outcome (instead of the stage-1
    /// estimate) into the matching encoder branch. Off by default: the
    /// architecture routes estimated potentials into the encoder.
    #[serde(default)]
    pub use_observed_s: bool,
    /// Standardize x/s/y on the training data; identity scaling when off
    /// (useful for closed-form checks).
    #[serde(default = "default_true")]
    pub standardize: bool,
}

fn default_hidden() -> usize {
    64
}
fn default_layers() -> usize {
    2
}
fn default_lr() -> f64 {
    1e-3
}
fn default_batch() -> usize {
    256
}
fn default_epochs() -> usize {
    80
}
fn default_mc() -> usize {
    1
}
fn default_true() -> bool {
    true
}

impl Hyperparams {
    pub fn new(d_z: usize) -> Self {
        Hyperparams {
            d_z,
            hidden_width: default_hidden(),
            n_layers: default_layers(),
            learning_rate: default_lr(),
            batch_size: default_batch(),
            epochs: default_epochs(),
            mc_samples: default_mc(),
            training_mode: TrainingMode::default(),
            seed: 0,
            use_observed_s: false,
            standardize: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("d_z", self.d_z),
            ("hidden_width", self.hidden_width),
            ("n_layers", self.n_layers),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("mc_samples", self.mc_samples),
        ];
        for (name, v) in positives {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning_rate must be a positive real, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let hp = Hyperparams::new(2);
        assert!(hp.validate().is_ok());
        assert_eq!(hp.training_mode, TrainingMode::TwoPhase);
        assert_eq!(hp.mc_samples, 1);
        assert!(!hp.use_observed_s);
    }

    #[test]
    fn zeroes_rejected() {
        for f in [
            |h: &mut Hyperparams| h.d_z = 0,
            |h: &mut Hyperparams| h.mc_samples = 0,
            |h: &mut Hyperparams| h.epochs = 0,
            |h: &mut Hyperparams| h.learning_rate = 0.0,
        ] {
            let mut hp = Hyperparams::new(2);
            f(&mut hp);
            assert!(hp.validate().is_err());
        }
    }

    #[test]
    fn json_round_trip_with_defaults() {
        let hp: Hyperparams = serde_json::from_str(r#"{"d_z": 2, "seed": 7}"#).unwrap();
        assert_eq!(hp.hidden_width, 64);
        assert_eq!(hp.seed, 7);
        let js = serde_json::to_string(&hp).unwrap();
        let back: Hyperparams = serde_json::from_str(&js).unwrap();
        assert_eq!(back, hp);
        // mode spelling in JSON
        let hp2: Hyperparams =
            serde_json::from_str(r#"{"d_z": 1, "training_mode": "joint"}"#).unwrap();
        assert_eq!(hp2.training_mode, TrainingMode::Joint);
        assert!(serde_json::from_str::<Hyperparams>(r#"{"d_z": 1, "bogus": 3}"#).is_err());
    }
}

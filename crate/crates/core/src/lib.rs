//! Estimation of long-term individual treatment effects from a short
//! experimental study combined with long-term observational records.
//!
//! The estimator trains in two stages. A two-headed regression net fits the
//! short-term potential outcomes on the experimental arm, where treatment is
//! randomized. A variational model then learns, on the observational arm, a
//! latent summary of the hidden confounders: an encoder conditioned on the
//! estimated short-term potentials, a prior conditioned on an auxiliary
//! categorical variable (which makes the latent recoverable rather than
//! merely fit), reconstruction heads for covariates, treatment, and
//! short-term outcome, and a long-term outcome head. Individual effects are
//! read off as the difference of the outcome head's means under the two
//! treatment arms.
//!
//! ## Modules
//!
//! - [`autodiff`] — reverse-mode tape, dense layers, Adam, checkpoints
//! - [`data`] — dataset container, synthetic generators, CSV round-trip
//! - [`model`] — the two-stage estimator itself
//! - [`baselines`] — S-/T-learner, equi-confounding, imputation references
//! - [`metrics`] — ATE error, PEHE, matched rank correlation (MCC)
//! - [`exp`] — experiment configs, seed plans, runners, report rendering

pub mod autodiff;
pub mod baselines;
pub mod data;
mod error;
pub mod exp;
pub mod metrics;
pub mod model;

pub use error::{Error, Result};

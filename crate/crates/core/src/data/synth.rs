//! Five synthetic scenarios with a latent confounder `Z` that drives
//! selection in the observational group but not in the experiment, and an
//! auxiliary category `U` that shifts the latent distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, GroundTruth, Group, Record};
use crate::{Error, Result};

/// Covariate dimension shared by all scenarios.
pub const D_X: usize = 2;
/// Short-term outcome dimension shared by all scenarios.
pub const D_S: usize = 1;
/// Latent confounder dimension shared by all scenarios.
pub const D_Z: usize = 2;

/// Configuration for one synthetic draw.
///
/// `beta` scales the latent's pull on observational treatment choice and on
/// the outcome, and is meaningful only for scenario 4 (default 3, which
/// makes scenario 4 coincide with scenario 1). `d_u_levels` widens or
/// narrows the auxiliary support and is meaningful only for scenario 5.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub scenario: u8,
    #[serde(default = "default_n")]
    pub n_o: usize,
    #[serde(default = "default_n")]
    pub n_e: usize,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub d_u_levels: Option<u32>,
    #[serde(default = "default_noise")]
    pub noise_std_s: f64,
    #[serde(default = "default_noise")]
    pub noise_std_y: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_n() -> usize {
    2000
}

fn default_noise() -> f64 {
    1.0
}

impl SynthConfig {
    pub fn new(scenario: u8, seed: u64) -> Self {
        SynthConfig {
            scenario,
            n_o: default_n(),
            n_e: default_n(),
            beta: None,
            d_u_levels: None,
            noise_std_s: default_noise(),
            noise_std_y: default_noise(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.scenario) {
            return Err(Error::Config(format!(
                "scenario must be 1..=5, got {}",
                self.scenario
            )));
        }
        if self.n_o == 0 || self.n_e == 0 {
            return Err(Error::Config(format!(
                "group sizes must be positive, got n_o={} n_e={}",
                self.n_o, self.n_e
            )));
        }
        if self.beta.is_some() && self.scenario != 4 {
            return Err(Error::Config(format!(
                "beta applies to scenario 4 only, got scenario {}",
                self.scenario
            )));
        }
        if let Some(levels) = self.d_u_levels {
            if self.scenario != 5 {
                return Err(Error::Config(format!(
                    "d_u_levels applies to scenario 5 only, got scenario {}",
                    self.scenario
                )));
            }
            if levels < 2 {
                return Err(Error::Config(format!(
                    "d_u_levels must be at least 2, got {levels}"
                )));
            }
        }
        for (name, v) in [("noise_std_s", self.noise_std_s), ("noise_std_y", self.noise_std_y)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be a positive real, got {v}")));
            }
        }
        Ok(())
    }

    fn u_levels(&self) -> u32 {
        self.d_u_levels.unwrap_or(5)
    }
}

/// Scenario 1 is scenario 4 at `beta = 3`; collapsing them up front keeps
/// the two draws bit-identical rather than merely distribution-identical.
fn resolve(scenario: u8, beta: Option<f64>) -> Result<(u8, f64)> {
    match scenario {
        1 => Ok((4, 3.0)),
        4 => Ok((4, beta.unwrap_or(3.0))),
        2 | 3 | 5 => Ok((scenario, 0.0)),
        other => Err(Error::Config(format!("scenario must be 1..=5, got {other}"))),
    }
}

fn z_params(scenario: u8, u: f64) -> ((f64, f64), f64) {
    match scenario {
        5 => ((-u, 1.5 * u), 2.5f64.sqrt()),
        _ => ((-u, 2.0 * u), 1.0),
    }
}

fn x_means(scenario: u8, z1: f64, z2: f64, u: f64) -> (f64, f64) {
    match scenario {
        5 => (0.8 * z1 + 0.4 * z2 - 1.8 * u, 0.4 * z1 + 0.4 * z2 + 1.8 * u),
        _ => (z1 + 0.5 * u, 0.5 * z2 + u),
    }
}

fn obs_logit(scenario: u8, beta: f64, x1: f64, x2: f64, z1: f64, z2: f64) -> f64 {
    match scenario {
        2 | 3 => (x1 + x2 + 3.0 * z1 + 3.0 * z2) / 4.0,
        4 => (x1 + x2 + beta * (z1 + z2)) / 4.0,
        _ => (x1 + x2 + z1 + z2) / 4.0, // scenario 5
    }
}

fn exp_logit(x1: f64, x2: f64) -> f64 {
    (x1 + x2) / 2.0
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Noiseless short-term potential outcome under arm `w`.
pub fn structural_s(scenario: u8, beta: Option<f64>, w: u8, x: &[f64], z: &[f64]) -> Result<f64> {
    let (scenario, _beta) = resolve(scenario, beta)?;
    check_arm(w)?;
    let [x1, x2] = two(x, "x")?;
    let [z1, z2] = two(z, "z")?;
    let wf = w as f64;
    Ok(match scenario {
        3 => 1.0 + wf + (1.5 + 3.0 * wf) * (x1 + x2) + z1 + z2,
        _ => 3.0 * wf + (2.0 + wf) * (x1 + x2) / 2.0 + (z1 + z2) / 2.0,
    })
}

/// Noiseless long-term outcome given arm `w` and a realized short-term
/// value `s`.
pub fn structural_y(
    scenario: u8,
    beta: Option<f64>,
    w: u8,
    x: &[f64],
    s: f64,
    z: &[f64],
) -> Result<f64> {
    let (scenario, beta) = resolve(scenario, beta)?;
    check_arm(w)?;
    let [x1, x2] = two(x, "x")?;
    let [z1, z2] = two(z, "z")?;
    let wf = w as f64;
    Ok(match scenario {
        2 => 4.0 * wf + (1.0 + wf) * (x1 + x2) / 2.0 + s,
        3 => 2.0 + 3.0 * wf + (2.0 + 6.0 * wf) * (x1 + x2) + 2.0 * (z1 + z2) - s,
        4 => 4.0 * wf + (1.0 + wf) * (x1 + x2) / 2.0 + s + beta * (z1 + z2) / 2.0,
        _ => 4.0 * wf + (1.0 + wf) * (x1 + x2) / 2.0 + s + (z1 + z2) / 2.0, // scenario 5
    })
}

/// Oracle individual effect at covariates `x`. The latent terms cancel
/// between arms, so the effect is a closed form in `x` alone; `beta` is
/// accepted for interface symmetry but never enters the value.
pub fn true_ite(scenario: u8, beta: Option<f64>, x: &[f64]) -> Result<f64> {
    let (scenario, _beta) = resolve(scenario, beta)?;
    let [x1, x2] = two(x, "x")?;
    Ok(match scenario {
        3 => 2.0 + 3.0 * (x1 + x2),
        _ => 7.0 + (x1 + x2),
    })
}

fn check_arm(w: u8) -> Result<()> {
    if w > 1 {
        return Err(Error::Domain(format!("treatment arm must be 0 or 1, got {w}")));
    }
    Ok(())
}

fn two(v: &[f64], name: &str) -> Result<[f64; 2]> {
    match v {
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::dim(name, "2", v.len().to_string())),
    }
}

/// Draw a full dataset plus its ground truth. Observational units come
/// first, then experimental; each unit consumes a fixed number of RNG draws
/// in a fixed order, so a given `(config, seed)` is reproducible bit for
/// bit.
pub fn generate(config: &SynthConfig) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let (scenario, beta) = resolve(config.scenario, config.beta)?;
    let levels = config.u_levels();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let n = config.n_o + config.n_e;
    let mut records = Vec::with_capacity(n);
    let mut gt = GroundTruth {
        z: Vec::with_capacity(n),
        tau: Vec::with_capacity(n),
        s0: Vec::with_capacity(n),
        s1: Vec::with_capacity(n),
    };

    for i in 0..n {
        let g = if i < config.n_o { Group::Observational } else { Group::Experimental };
        let u = rng.gen_range(0..levels);
        let uf = u as f64;

        let ((mz1, mz2), sdz) = z_params(scenario, uf);
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        let (z1, z2) = (mz1 + sdz * e1, mz2 + sdz * e2);

        let (mx1, mx2) = x_means(scenario, z1, z2, uf);
        let e3: f64 = rng.sample(StandardNormal);
        let e4: f64 = rng.sample(StandardNormal);
        let (x1, x2) = (mx1 + e3, mx2 + e4);

        let logit = match g {
            Group::Observational => obs_logit(scenario, beta, x1, x2, z1, z2),
            Group::Experimental => exp_logit(x1, x2),
        };
        let w = (rng.gen::<f64>() < sigmoid(logit)) as u8;

        let x = [x1, x2];
        let z = [z1, z2];
        let eps_s0: f64 = rng.sample(StandardNormal);
        let eps_s1: f64 = rng.sample(StandardNormal);
        let s0 = structural_s(scenario, Some(beta), 0, &x, &z)? + config.noise_std_s * eps_s0;
        let s1 = structural_s(scenario, Some(beta), 1, &x, &z)? + config.noise_std_s * eps_s1;
        let s = if w == 1 { s1 } else { s0 };

        let y = match g {
            Group::Observational => {
                let eps_y: f64 = rng.sample(StandardNormal);
                Some(
                    structural_y(scenario, Some(beta), w, &x, s, &z)?
                        + config.noise_std_y * eps_y,
                )
            }
            Group::Experimental => None,
        };

        records.push(Record { g, u, w, x: x.to_vec(), s: vec![s], y });
        gt.z.push(z.to_vec());
        gt.tau.push(true_ite(scenario, Some(beta), &x)?);
        gt.s0.push(vec![s0]);
        gt.s1.push(vec![s1]);
    }

    let ds = Dataset::new(records)?;
    gt.validate_against(&ds)?;
    Ok((ds, gt))
}

//! Combined experimental/observational dataset container, the synthetic
//! benchmark generators with their ground truth, and the CSV interchange
//! format.

mod csvio;
mod synth;

pub use csvio::{read_csv, write_csv};
pub use synth::{generate, structural_s, structural_y, true_ite, SynthConfig};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Tensor;
use crate::{Error, Result};

/// Which study a unit belongs to: the long-term observational records or the
/// short-term randomized experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Observational,
    Experimental,
}

impl Group {
    pub fn code(self) -> &'static str {
        match self {
            Group::Observational => "o",
            Group::Experimental => "e",
        }
    }
}

/// One unit. `y` is present exactly for observational units: the experiment
/// ended before the long-term outcome existed.
#[derive(Debug, Clone)]
pub struct Record {
    pub g: Group,
    pub u: u32,
    pub w: u8,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub y: Option<f64>,
}

/// Immutable collection of records with consistent dimensions and both
/// groups non-empty.
#[derive(Debug, Clone)]
pub struct Dataset {
    records: Vec<Record>,
    d_x: usize,
    d_s: usize,
}

impl Dataset {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        let Some(first) = records.first() else {
            return Err(Error::Config("dataset has no records".into()));
        };
        let (d_x, d_s) = (first.x.len(), first.s.len());
        for (i, r) in records.iter().enumerate() {
            if r.w > 1 {
                return Err(Error::Domain(format!("record {i}: w = {} is not binary", r.w)));
            }
            if r.x.len() != d_x || r.s.len() != d_s {
                return Err(Error::dim(
                    format!("record {i}"),
                    format!("d_x={d_x}, d_s={d_s}"),
                    format!("d_x={}, d_s={}", r.x.len(), r.s.len()),
                ));
            }
            match (r.g, r.y.is_some()) {
                (Group::Observational, false) => {
                    return Err(Error::Domain(format!(
                        "record {i}: observational unit without long-term outcome y"
                    )))
                }
                (Group::Experimental, true) => {
                    return Err(Error::Domain(format!(
                        "record {i}: experimental unit carries a long-term outcome y"
                    )))
                }
                _ => {}
            }
        }
        Ok(Dataset { records, d_x, d_s })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn n_obs(&self) -> usize {
        self.records.iter().filter(|r| r.g == Group::Observational).count()
    }

    pub fn n_exp(&self) -> usize {
        self.records.iter().filter(|r| r.g == Group::Experimental).count()
    }

    /// New dataset holding clones of the chosen records, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        Dataset::new(idx.iter().map(|&i| self.records[i].clone()).collect())
    }

    /// The records of one group as their own dataset; errors when that
    /// group is empty.
    pub fn filter_group(&self, g: Group) -> Result<Dataset> {
        let idx: Vec<usize> =
            (0..self.records.len()).filter(|&i| self.records[i].g == g).collect();
        if idx.is_empty() {
            return Err(Error::Config(format!("dataset has no {} records", g.code())));
        }
        self.subset(&idx)
    }

    /// Estimation needs both studies represented; split partitions and
    /// prediction-only inputs may be single-group.
    pub fn require_both_groups(&self) -> Result<()> {
        if self.n_obs() == 0 || self.n_exp() == 0 {
            return Err(Error::Config(format!(
                "need both groups non-empty, got {} observational / {} experimental",
                self.n_obs(),
                self.n_exp()
            )));
        }
        Ok(())
    }

    pub fn obs_indices(&self) -> Vec<usize> {
        (0..self.records.len()).filter(|&i| self.records[i].g == Group::Observational).collect()
    }

    pub fn exp_indices(&self) -> Vec<usize> {
        (0..self.records.len()).filter(|&i| self.records[i].g == Group::Experimental).collect()
    }

    /// Sorted distinct auxiliary codes present in the data; the order defines
    /// the one-hot layout used by the model.
    pub fn u_levels(&self) -> Vec<u32> {
        let mut levels: Vec<u32> = self.records.iter().map(|r| r.u).collect();
        levels.sort_unstable();
        levels.dedup();
        levels
    }

    // ── matrix views for the chosen unit indices (training plumbing) ──

    pub fn x_matrix(&self, idx: &[usize]) -> Tensor {
        let mut data = Vec::with_capacity(idx.len() * self.d_x);
        for &i in idx {
            data.extend_from_slice(&self.records[i].x);
        }
        Tensor::new(vec![idx.len(), self.d_x], data).expect("consistent dims")
    }

    pub fn s_matrix(&self, idx: &[usize]) -> Tensor {
        let mut data = Vec::with_capacity(idx.len() * self.d_s);
        for &i in idx {
            data.extend_from_slice(&self.records[i].s);
        }
        Tensor::new(vec![idx.len(), self.d_s], data).expect("consistent dims")
    }

    /// Treatment indicators as an `[n]` vector.
    pub fn w_vector(&self, idx: &[usize]) -> Tensor {
        let data = idx.iter().map(|&i| self.records[i].w as f64).collect();
        Tensor::new(vec![idx.len()], data).expect("consistent dims")
    }

    /// Treatment indicators as an `[n,1]` column.
    pub fn w_column(&self, idx: &[usize]) -> Tensor {
        let data = idx.iter().map(|&i| self.records[i].w as f64).collect();
        Tensor::new(vec![idx.len(), 1], data).expect("consistent dims")
    }

    /// Long-term outcomes as an `[n,1]` column; errors if any chosen unit is
    /// experimental.
    pub fn y_column(&self, idx: &[usize]) -> Result<Tensor> {
        let mut data = Vec::with_capacity(idx.len());
        for &i in idx {
            data.push(self.records[i].y.ok_or_else(|| {
                Error::Usage(format!("record {i} is experimental and has no y"))
            })?);
        }
        Tensor::new(vec![idx.len(), 1], data)
    }

    /// One-hot encoding of `u` against a level table; errors on a code that
    /// is not in the table.
    pub fn u_onehot(&self, idx: &[usize], levels: &[u32]) -> Result<Tensor> {
        let mut data = vec![0.0; idx.len() * levels.len()];
        for (row, &i) in idx.iter().enumerate() {
            let u = self.records[i].u;
            let pos = levels
                .iter()
                .position(|&l| l == u)
                .ok_or_else(|| Error::Domain(format!("record {i}: u = {u} not in level table {levels:?}")))?;
            data[row * levels.len() + pos] = 1.0;
        }
        Tensor::new(vec![idx.len(), levels.len()], data)
    }
}

/// Per-unit quantities the generator knows but an estimator never sees:
/// the latent confounder, the oracle effect at the unit's covariates, and
/// both potential short-term outcomes.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub z: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
    pub s0: Vec<Vec<f64>>,
    pub s1: Vec<Vec<f64>>,
}

impl GroundTruth {
    pub fn d_z(&self) -> usize {
        self.z.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn validate_against(&self, ds: &Dataset) -> Result<()> {
        let n = ds.len();
        if self.z.len() != n || self.tau.len() != n || self.s0.len() != n || self.s1.len() != n {
            return Err(Error::dim(
                "ground truth alignment",
                format!("{n} units"),
                format!(
                    "z: {}, tau: {}, s0: {}, s1: {}",
                    self.z.len(),
                    self.tau.len(),
                    self.s0.len(),
                    self.s1.len()
                ),
            ));
        }
        if let Some(bad) = self.tau.iter().find(|t| !t.is_finite()) {
            return Err(Error::Domain(format!("non-finite oracle tau {bad}")));
        }
        Ok(())
    }

    pub fn subset(&self, idx: &[usize]) -> GroundTruth {
        GroundTruth {
            z: idx.iter().map(|&i| self.z[i].clone()).collect(),
            tau: idx.iter().map(|&i| self.tau[i]).collect(),
            s0: idx.iter().map(|&i| self.s0[i].clone()).collect(),
            s1: idx.iter().map(|&i| self.s1[i].clone()).collect(),
        }
    }

    /// Latent confounders as an `[n, d_z]` matrix for the chosen units.
    pub fn z_matrix(&self, idx: &[usize]) -> Tensor {
        let d = self.d_z();
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            data.extend_from_slice(&self.z[i]);
        }
        Tensor::new(vec![idx.len(), d], data).expect("consistent dims")
    }
}

/// Condition report for the auxiliary-variable support requirement: the
/// latent is recoverable only when `u` takes at least `2 d_z + 1` distinct
/// values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Theorem1Report {
    pub distinct_u: usize,
    pub satisfied: bool,
}

pub fn validate_theorem1_support(ds: &Dataset, d_z: usize) -> Theorem1Report {
    let distinct_u = ds.u_levels().len();
    Theorem1Report { distinct_u, satisfied: distinct_u >= 2 * d_z + 1 }
}

/// Seed-deterministic train/test split. Test units are drawn from the
/// observational group only — long-term evaluation needs `y` and the oracle
/// effect — while every experimental unit goes to train.
pub fn split(
    ds: &Dataset,
    gt: &GroundTruth,
    test_fraction: f64,
    seed: u64,
) -> Result<((Dataset, GroundTruth), (Dataset, GroundTruth))> {
    if !(0.0..1.0).contains(&test_fraction) || test_fraction == 0.0 {
        return Err(Error::Config(format!(
            "test_fraction must be in (0,1), got {test_fraction}"
        )));
    }
    gt.validate_against(ds)?;

    let obs = ds.obs_indices();
    let n_test = ((obs.len() as f64) * test_fraction).round() as usize;
    if n_test == 0 || n_test >= obs.len() {
        return Err(Error::Config(format!(
            "test_fraction {test_fraction} leaves an empty partition ({} observational units)",
            obs.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = obs.clone();
    shuffled.shuffle(&mut rng);
    let mut test_idx: Vec<usize> = shuffled[..n_test].to_vec();
    test_idx.sort_unstable();

    let in_test = {
        let mut mask = vec![false; ds.len()];
        for &i in &test_idx {
            mask[i] = true;
        }
        mask
    };
    let train_idx: Vec<usize> = (0..ds.len()).filter(|&i| !in_test[i]).collect();

    let take = |idx: &[usize]| -> Result<(Dataset, GroundTruth)> {
        Ok((ds.subset(idx)?, gt.subset(idx)))
    };
    Ok((take(&train_idx)?, take(&test_idx)?))
}

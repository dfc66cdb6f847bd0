//! Per-column standardization. Networks see centered, unit-scale inputs and
//! targets; predictions map back through the stored moments.

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::{Error, Result};

/// Stddev floor: a constant column standardizes to zero rather than
/// dividing by zero.
const SCALE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    /// Fit per-column mean and (population) stddev on `[n, d]` data.
    pub fn fit(t: &Tensor) -> Standardizer {
        Self::fit_skipping(t, &[])
    }

    /// Fit, leaving the listed columns untouched (mean 0, scale 1); used for
    /// binary columns whose raw 0/1 coding must survive into likelihoods.
    pub fn fit_skipping(t: &Tensor, skip_cols: &[usize]) -> Standardizer {
        let (n, d) = (t.rows(), t.cols());
        let mut mean = vec![0.0; d];
        let mut std = vec![1.0; d];
        for j in 0..d {
            if skip_cols.contains(&j) {
                continue;
            }
            let m = (0..n).map(|i| t.at(i, j)).sum::<f64>() / n as f64;
            let v = (0..n).map(|i| (t.at(i, j) - m).powi(2)).sum::<f64>() / n as f64;
            mean[j] = m;
            std[j] = v.sqrt().max(SCALE_FLOOR);
        }
        Standardizer { mean, std }
    }

    /// Pass-through scaler (mean 0, scale 1 everywhere).
    pub fn identity(dim: usize) -> Standardizer {
        Standardizer { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn scale(&self) -> &[f64] {
        &self.std
    }

    fn check(&self, t: &Tensor, what: &str) -> Result<()> {
        if t.cols() != self.dim() {
            return Err(Error::dim(what, format!("{} columns", self.dim()), format!("{}", t.cols())));
        }
        Ok(())
    }

    pub fn transform(&self, t: &Tensor) -> Result<Tensor> {
        self.check(t, "standardize")?;
        let (n, d) = (t.rows(), t.cols());
        let mut out = t.clone();
        for i in 0..n {
            for j in 0..d {
                out.data_mut()[i * d + j] = (t.at(i, j) - self.mean[j]) / self.std[j];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self, t: &Tensor) -> Result<Tensor> {
        self.check(t, "de-standardize")?;
        let (n, d) = (t.rows(), t.cols());
        let mut out = t.clone();
        for i in 0..n {
            for j in 0..d {
                out.data_mut()[i * d + j] = t.at(i, j) * self.std[j] + self.mean[j];
            }
        }
        Ok(out)
    }
}

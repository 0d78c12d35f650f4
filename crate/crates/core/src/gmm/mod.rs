//! Diagonal-covariance Gaussian mixture models.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

mod em;
mod kmeans;

pub use em::{e_step, m_step, train_em, variance_floor, EmConfig, Responsibilities, TrainReport};
pub use kmeans::{kmeans_init, KMEANS_ITERATIONS};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Log density of a diagonal Gaussian.
pub fn gaussian_logpdf(x: &[f64], mean: &[f64], variance: &[f64]) -> Result<f64> {
    if x.len() != mean.len() || x.len() != variance.len() {
        return Err(Error::DimensionMismatch { expected: mean.len(), actual: x.len() });
    }
    if variance.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveVariance);
    }
    let mut acc = x.len() as f64 * LN_2PI;
    for ((xi, mi), vi) in x.iter().zip(mean).zip(variance) {
        let d = xi - mi;
        acc += vi.ln() + d * d / vi;
    }
    Ok(-0.5 * acc)
}

/// `log Σ exp(v)`, ignoring `-inf` entries.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// K weights, K mean vectors and K diagonal variance vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    weights: Vec<f64>,
    means: Matrix,
    variances: Matrix,
    inv_var: Matrix,
    /// `ln w_k - (d ln 2π + Σ ln σ²_k) / 2`.
    log_const: Vec<f64>,
}

impl GmmModel {
    pub fn new(weights: Vec<f64>, means: Matrix, variances: Matrix) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(Error::InvalidArgument("a mixture needs at least one component".into()));
        }
        if means.rows() != k || variances.rows() != k {
            return Err(Error::DimensionMismatch { expected: k, actual: means.rows().min(variances.rows()) });
        }
        if means.cols() != variances.cols() || means.cols() == 0 {
            return Err(Error::DimensionMismatch { expected: means.cols(), actual: variances.cols() });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("mixture weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(alloc::format!("mixture weights sum to {total}, not 1")));
        }
        if means.as_slice().iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument("non-finite mean".into()));
        }
        if variances.as_slice().iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::NonPositiveVariance);
        }
        let d = means.cols();
        let mut inv_var = variances.clone();
        inv_var.map_inplace(|v| 1.0 / v);
        let log_const = weights
            .iter()
            .zip(variances.iter_rows())
            .map(|(w, var)| w.ln() - 0.5 * (d as f64 * LN_2PI + var.iter().map(|v| v.ln()).sum::<f64>()))
            .collect();
        Ok(Self { weights, means, variances, inv_var, log_const })
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.cols()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &Matrix {
        &self.means
    }

    pub fn variances(&self) -> &Matrix {
        &self.variances
    }

    /// `ln w_k + ln N(x | μ_k, Σ_k)` for every component. No dimension check.
    pub fn component_log_densities(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let mean = self.means.row(k);
            let inv = self.inv_var.row(k);
            let mut q = 0.0;
            for ((xi, mi), iv) in x.iter().zip(mean).zip(inv) {
                let d = xi - mi;
                q += d * d * iv;
            }
            *o = self.log_const[k] - 0.5 * q;
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: len });
        }
        Ok(())
    }

    /// Mixture log density, log-sum-exp over components.
    pub fn logpdf(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let mut buf = alloc::vec![0.0; self.n_components()];
        self.component_log_densities(x, &mut buf);
        Ok(log_sum_exp(&buf))
    }

    /// Component posteriors for `x`, normalized to sum to one; returns the
    /// mixture log density.
    pub fn posteriors(&self, x: &[f64], out: &mut [f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        self.component_log_densities(x, out);
        let total = log_sum_exp(out);
        let mut sum = 0.0;
        for o in out.iter_mut() {
            *o = (*o - total).exp();
            sum += *o;
        }
        for o in out.iter_mut() {
            *o /= sum;
        }
        Ok(total)
    }
}

/// Mixture log density of one vector.
pub fn gmm_logpdf(model: &GmmModel, x: &[f64]) -> Result<f64> {
    model.logpdf(x)
}

/// Average per-frame log-likelihood of `frames` under `model`.
pub fn score_utterance(model: &GmmModel, frames: &Matrix) -> Result<f64> {
    if frames.is_empty() {
        return Err(Error::Empty);
    }
    model.check_dim(frames.cols())?;
    let mut buf = alloc::vec![0.0; model.n_components()];
    let mut total = 0.0;
    for row in frames.iter_rows() {
        model.component_log_densities(row, &mut buf);
        total += log_sum_exp(&buf);
    }
    Ok(total / frames.rows() as f64)
}

use alloc::vec::Vec;

use num_traits::Float;

use super::{kmeans_init, GmmModel};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Weight below which a component is considered collapsed and re-seeded.
const DEGENERATE_WEIGHT: f64 = 1e-8;
/// Frames required per component.
const FRAMES_PER_COMPONENT: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub components: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once the average log-likelihood improves by less than this.
    pub tol: f64,
    /// Variance floor as a fraction of the global per-dimension variance.
    pub var_floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { components: 16, seed: 0, max_iter: 100, tol: 1e-5, var_floor: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Number of M-steps performed.
    pub iterations: usize,
    /// Average per-frame log-likelihood before each M-step, plus the final model's.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
    /// Collapsed components that were re-seeded.
    pub reseeded: usize,
}

/// Posterior matrix (`n_frames × K`) and the average log-likelihood it was
/// computed at.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    pub gamma: Matrix,
    pub avg_log_likelihood: f64,
}

/// Per-dimension floor `var_floor × global variance`.
pub fn variance_floor(data: &Matrix, var_floor: f64) -> Vec<f64> {
    let n = data.rows().max(1) as f64;
    let d = data.cols();
    let mut mean = alloc::vec![0.0; d];
    for row in data.iter_rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = alloc::vec![0.0; d];
    for row in data.iter_rows() {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    // Constant dimensions still need a strictly positive floor.
    var.iter().map(|v| var_floor * (v / n).max(1e-10)).collect()
}

pub fn e_step(model: &GmmModel, data: &Matrix) -> Result<Responsibilities> {
    if data.is_empty() {
        return Err(Error::Empty);
    }
    let mut gamma = Matrix::zeros(data.rows(), model.n_components());
    let mut total = 0.0;
    for (i, x) in data.iter_rows().enumerate() {
        total += model.posteriors(x, gamma.row_mut(i))?;
    }
    Ok(Responsibilities { gamma, avg_log_likelihood: total / data.rows() as f64 })
}

/// Closed-form updates with variance flooring. Returns the new model and
/// the number of collapsed components that were re-seeded.
pub fn m_step(data: &Matrix, resp: &Responsibilities, floor: &[f64]) -> Result<(GmmModel, usize)> {
    let (n, d) = (data.rows(), data.cols());
    let k = resp.gamma.cols();
    let mut occupancy = alloc::vec![0.0; k];
    let mut means = Matrix::zeros(k, d);
    for (g, x) in resp.gamma.iter_rows().zip(data.iter_rows()) {
        for c in 0..k {
            occupancy[c] += g[c];
            for (m, v) in means.row_mut(c).iter_mut().zip(x) {
                *m += g[c] * v;
            }
        }
    }
    for c in 0..k {
        if occupancy[c] > 0.0 {
            let inv = 1.0 / occupancy[c];
            means.row_mut(c).iter_mut().for_each(|m| *m *= inv);
        }
    }
    let mut variances = Matrix::zeros(k, d);
    for (g, x) in resp.gamma.iter_rows().zip(data.iter_rows()) {
        for c in 0..k {
            let mean = means.row(c);
            for ((s, v), m) in variances.row_mut(c).iter_mut().zip(x).zip(mean) {
                *s += g[c] * (v - m) * (v - m);
            }
        }
    }
    for c in 0..k {
        for j in 0..d {
            let v = if occupancy[c] > 0.0 { variances.get(c, j) / occupancy[c] } else { 0.0 };
            variances.set(c, j, v.max(floor[j]));
        }
    }
    let total: f64 = occupancy.iter().sum();
    let mut weights: Vec<f64> = occupancy.iter().map(|o| o / total).collect();
    debug_assert!(n > 0);

    let mut reseeded = 0;
    for c in 0..k {
        if weights[c] >= DEGENERATE_WEIGHT {
            continue;
        }
        // Split the broadest live component along its standard deviations.
        let donor = (0..k).filter(|&j| j != c && weights[j] >= DEGENERATE_WEIGHT).max_by(|&a, &b| {
            let sa: f64 = variances.row(a).iter().sum();
            let sb: f64 = variances.row(b).iter().sum();
            sa.partial_cmp(&sb).unwrap_or(core::cmp::Ordering::Equal)
        });
        let Some(donor) = donor else { break };
        for j in 0..d {
            let sd = variances.get(donor, j).sqrt();
            let m = means.get(donor, j);
            means.set(c, j, m + 0.5 * sd);
            means.set(donor, j, m - 0.5 * sd);
            variances.set(c, j, variances.get(donor, j));
        }
        let half = 0.5 * (weights[donor] + weights[c]);
        weights[donor] = half;
        weights[c] = half;
        reseeded += 1;
    }
    Ok((GmmModel::new(weights, means, variances)?, reseeded))
}

/// Expectation-maximization from a k-means initialization.
pub fn train_em(data: &Matrix, cfg: &EmConfig) -> Result<(GmmModel, TrainReport)> {
    let n = data.rows();
    if n == 0 {
        return Err(Error::Empty);
    }
    if cfg.components == 0 {
        return Err(Error::InvalidArgument("need at least one mixture component".into()));
    }
    let required = FRAMES_PER_COMPONENT * cfg.components;
    if n < required {
        return Err(Error::InsufficientFrames { frames: n, components: cfg.components, required });
    }
    if !(cfg.var_floor > 0.0) {
        return Err(Error::InvalidArgument("variance floor must be positive".into()));
    }
    let floor = variance_floor(data, cfg.var_floor);
    let mut model = kmeans_init(data, cfg.components, cfg.seed, &floor)?;
    let mut report = TrainReport { iterations: 0, log_likelihood: Vec::new(), converged: false, reseeded: 0 };
    loop {
        let resp = e_step(&model, data)?;
        let ll = resp.avg_log_likelihood;
        if !ll.is_finite() {
            return Err(Error::NonFinite { stage: "EM log-likelihood", frame: 0 });
        }
        let prev = report.log_likelihood.last().copied();
        report.log_likelihood.push(ll);
        if let Some(p) = prev {
            if ll - p < cfg.tol {
                report.converged = true;
                break;
            }
        }
        if report.iterations >= cfg.max_iter {
            break;
        }
        let (next, reseeded) = m_step(data, &resp, &floor)?;
        report.reseeded += reseeded;
        report.iterations += 1;
        model = next;
    }
    Ok((model, report))
}

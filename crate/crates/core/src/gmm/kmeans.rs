use alloc::vec::Vec;

use rand::Rng;

use super::GmmModel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

pub const KMEANS_ITERATIONS: usize = 10;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centers: &Matrix) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, c) in centers.iter_rows().enumerate() {
        let d = sq_dist(x, c);
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

/// k-means++ seeding; falls back to a uniform draw among unused points
/// once every remaining point coincides with a centre.
fn plus_plus(data: &Matrix, k: usize, rng: &mut impl Rng) -> Matrix {
    let n = data.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.gen_range(0..n));
    let mut dist: Vec<f64> = data.iter_rows().map(|x| sq_dist(x, data.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut idx = n - 1;
            for (i, d) in dist.iter().enumerate() {
                if *d > 0.0 {
                    if target < *d {
                        idx = i;
                        break;
                    }
                    target -= d;
                }
            }
            // Rounding can leave `idx` on a zero-distance point.
            if dist[idx] == 0.0 {
                idx = dist.iter().rposition(|d| *d > 0.0).unwrap_or(idx);
            }
            idx
        } else {
            let unused: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            unused[rng.gen_range(0..unused.len())]
        };
        chosen.push(pick);
        for (d, x) in dist.iter_mut().zip(data.iter_rows()) {
            *d = d.min(sq_dist(x, data.row(pick)));
        }
    }
    Matrix::from_rows(data.cols(), chosen.iter().map(|&i| data.row(i))).expect("rows share width")
}

/// Initial mixture from k-means++ seeding and 10 Lloyd iterations:
/// occupancy weights, cluster means and floored within-cluster variances.
/// `floor` holds the per-dimension variance floor.
pub fn kmeans_init(data: &Matrix, k: usize, seed: u64, floor: &[f64]) -> Result<GmmModel> {
    let (n, d) = (data.rows(), data.cols());
    if n == 0 {
        return Err(Error::Empty);
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(alloc::format!("cannot place {k} centres on {n} points")));
    }
    if floor.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: floor.len() });
    }
    let mut rng = seed::rng(seed);
    let mut centers = plus_plus(data, k, &mut rng);
    let mut assign = alloc::vec![0usize; n];
    for _ in 0..KMEANS_ITERATIONS {
        for (a, x) in assign.iter_mut().zip(data.iter_rows()) {
            *a = nearest(x, &centers);
        }
        let mut sums = Matrix::zeros(k, d);
        let mut counts = alloc::vec![0usize; k];
        for (&a, x) in assign.iter().zip(data.iter_rows()) {
            counts[a] += 1;
            for (s, v) in sums.row_mut(a).iter_mut().zip(x) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (ctr, s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *ctr = s * inv;
                }
            }
        }
    }
    for (a, x) in assign.iter_mut().zip(data.iter_rows()) {
        *a = nearest(x, &centers);
    }

    let mut counts = alloc::vec![0usize; k];
    let mut scatter = Matrix::zeros(k, d);
    for (&a, x) in assign.iter().zip(data.iter_rows()) {
        counts[a] += 1;
        for ((s, v), c) in scatter.row_mut(a).iter_mut().zip(x).zip(centers.row(a)) {
            *s += (v - c) * (v - c);
        }
    }
    let mut variances = Matrix::zeros(k, d);
    for c in 0..k {
        for j in 0..d {
            let v = if counts[c] > 0 { scatter.get(c, j) / counts[c] as f64 } else { 0.0 };
            variances.set(c, j, v.max(floor[j]));
        }
    }
    // Empty clusters (duplicate points) get one point's worth of weight.
    let raw: Vec<f64> = counts.iter().map(|&c| c.max(1) as f64).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    GmmModel::new(weights, centers, variances)
}

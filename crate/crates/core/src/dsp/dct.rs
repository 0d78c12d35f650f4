use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::error::{Error, Result};

/// Orthonormal DCT-II of a fixed input length, truncated to the first
/// `n_out` coefficients. The basis is tabulated once and reused per frame.
#[derive(Debug, Clone)]
pub struct Dct {
    n_in: usize,
    n_out: usize,
    basis: Vec<f64>,
}

impl Dct {
    pub fn new(n_in: usize, n_out: usize) -> Result<Self> {
        if n_in == 0 || n_out > n_in {
            return Err(Error::InvalidArgument(alloc::format!("DCT with {n_out} outputs from {n_in} inputs")));
        }
        let scale0 = (1.0 / n_in as f64).sqrt();
        let scale = (2.0 / n_in as f64).sqrt();
        let mut basis = Vec::with_capacity(n_in * n_out);
        for k in 0..n_out {
            let s = if k == 0 { scale0 } else { scale };
            for n in 0..n_in {
                basis.push(s * (PI * k as f64 * (2 * n + 1) as f64 / (2 * n_in) as f64).cos());
            }
        }
        Ok(Self { n_in, n_out, basis })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn apply(&self, input: &[f64], out: &mut [f64]) {
        debug_assert_eq!(input.len(), self.n_in);
        debug_assert_eq!(out.len(), self.n_out);
        for (o, row) in out.iter_mut().zip(self.basis.chunks_exact(self.n_in)) {
            *o = row.iter().zip(input).map(|(b, x)| b * x).sum();
        }
    }

    /// Transpose of the basis (DCT-III); the exact inverse when
    /// `n_out == n_in`.
    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.n_in];
        for (c, row) in coeffs.iter().zip(self.basis.chunks_exact(self.n_in)) {
            for (o, b) in out.iter_mut().zip(row) {
                *o += c * b;
            }
        }
        out
    }
}

/// First `n_out` orthonormal DCT-II coefficients of `input`.
pub fn dct_ii(input: &[f64], n_out: usize) -> Result<Vec<f64>> {
    let dct = Dct::new(input.len(), n_out)?;
    let mut out = alloc::vec![0.0; n_out];
    dct.apply(input, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_vector_has_only_dc() {
        let c = dct_ii(&[2.5; 26], 26).unwrap();
        assert!((c[0] - 2.5 * (26.0f64).sqrt()).abs() < 1e-12);
        for v in &c[1..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn too_many_outputs() {
        assert!(dct_ii(&[1.0; 4], 5).is_err());
        assert!(dct_ii(&[], 0).is_err());
    }

    #[test]
    fn full_length_round_trip() {
        let x: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let dct = Dct::new(40, 40).unwrap();
        let mut c = alloc::vec![0.0; 40];
        dct.apply(&x, &mut c);
        for (a, b) in dct.inverse(&c).iter().zip(&x) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

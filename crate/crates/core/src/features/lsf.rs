//! Line spectral frequencies.
//!
//! For an even-order inverse filter `A(z)`, the sum and difference
//! polynomials `P(z) = A(z) + z^-(p+1) A(1/z)` and
//! `Q(z) = A(z) - z^-(p+1) A(1/z)` have their roots on the unit circle,
//! with trivial roots at `z = -1` (P) and `z = 1` (Q). After removing those,
//! each is a symmetric polynomial evaluated as a Chebyshev series in
//! `cos ω`; roots are bracketed on a frequency grid and refined by
//! bisection. The roots of P and Q interlace, starting with P.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use super::{analyze, Extractor, FeatureConfig, FeatureKind, FeatureMatrix, LpcStats};
use crate::audio::AudioBuffer;
use crate::dsp::{autocorrelation, levinson_durbin};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const INITIAL_GRID: usize = 512;
const MAX_GRID: usize = 1 << 16;
const BISECTIONS: usize = 64;

/// Symmetric reduced polynomials `(P', Q')`, each of degree `p`.
fn reduced_polynomials(coeffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = coeffs.len();
    let a: Vec<f64> = core::iter::once(1.0).chain(coeffs.iter().map(|c| -c)).collect();
    let at = |i: usize| if i <= p { a[i] } else { 0.0 };
    let mut sum = Vec::with_capacity(p + 1);
    let mut diff = Vec::with_capacity(p + 1);
    let (mut ps, mut qs) = (0.0, 0.0);
    for i in 0..=p {
        let pi = at(i) + at(p + 1 - i);
        let qi = at(i) - at(p + 1 - i);
        // Divide by (1 + z^-1) and (1 - z^-1) respectively.
        ps = pi - ps;
        qs += qi;
        sum.push(ps);
        diff.push(qs);
    }
    (sum, diff)
}

/// `e^{jmω} F(e^{jω})` for a symmetric degree-2m polynomial, via Clenshaw
/// on the Chebyshev coefficients in `x = cos ω`.
fn chebyshev_eval(poly: &[f64], x: f64) -> f64 {
    let m = (poly.len() - 1) / 2;
    let coef = |n: usize| if n == 0 { poly[m] } else { 2.0 * poly[m - n] };
    let (mut b1, mut b2) = (0.0, 0.0);
    for n in (1..=m).rev() {
        let b0 = coef(n) + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    coef(0) + x * b1 - b2
}

fn find_roots(poly: &[f64], grid: usize, out: &mut Vec<f64>) {
    let f = |w: f64| chebyshev_eval(poly, w.cos());
    let mut w_prev = 0.0;
    let mut f_prev = f(0.0);
    for i in 1..=grid {
        let w = PI * i as f64 / grid as f64;
        let fw = f(w);
        if f_prev == 0.0 && i > 1 {
            out.push(w_prev);
        } else if f_prev * fw < 0.0 {
            let (mut lo, mut hi, mut flo) = (w_prev, w, f_prev);
            for _ in 0..BISECTIONS {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        w_prev = w;
        f_prev = fw;
    }
}

/// Line spectral frequencies (radians, ascending in (0, π)) of the
/// predictor `coeffs` (`A(z) = 1 - Σ a_k z^-k`, even order). The error
/// carries the number of roots found when bracketing fails.
pub fn lpc_to_lsf(coeffs: &[f64]) -> core::result::Result<Vec<f64>, usize> {
    let p = coeffs.len();
    if p == 0 || !p.is_multiple_of(2) {
        return Err(0);
    }
    let (sum, diff) = reduced_polynomials(coeffs);
    let m = p / 2;
    let mut grid = INITIAL_GRID;
    let mut found;
    loop {
        let mut pr = Vec::with_capacity(m);
        let mut qr = Vec::with_capacity(m);
        find_roots(&sum, grid, &mut pr);
        find_roots(&diff, grid, &mut qr);
        found = pr.len().min(m) + qr.len().min(m);
        if pr.len() == m && qr.len() == m {
            let mut lsf = Vec::with_capacity(p);
            for (a, b) in pr.iter().zip(&qr) {
                lsf.push(*a);
                lsf.push(*b);
            }
            let ordered = lsf.windows(2).all(|w| w[1] > w[0]) && lsf[0] > 0.0 && lsf[p - 1] < PI;
            if ordered {
                return Ok(lsf);
            }
        }
        if grid >= MAX_GRID {
            return Err(found);
        }
        grid *= 2;
    }
}

fn multiply(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Inverse of [`lpc_to_lsf`]: predictor coefficients from interlaced LSFs.
pub fn lsf_to_lpc(lsf: &[f64]) -> Vec<f64> {
    let p = lsf.len();
    let mut sum = alloc::vec![1.0, 1.0];
    let mut diff = alloc::vec![1.0, -1.0];
    for (i, w) in lsf.iter().enumerate() {
        let section = [1.0, -2.0 * w.cos(), 1.0];
        if i % 2 == 0 {
            sum = multiply(&sum, &section);
        } else {
            diff = multiply(&diff, &section);
        }
    }
    (1..=p).map(|k| -0.5 * (sum[k] + diff[k])).collect()
}

fn default_lsf(order: usize) -> Vec<f64> {
    (1..=order).map(|i| PI * i as f64 / (order + 1) as f64).collect()
}

/// 10 LSFs per frame (order set by the config).
pub fn extract_lsf(audio: &AudioBuffer, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    extract_lsf_with_stats(audio, cfg).map(|(m, _)| m)
}

/// Frames with a failed recursion repeat the previous frame's LSFs; before
/// any valid frame, equally spaced frequencies (the flat-spectrum LSFs) are used.
pub fn extract_lsf_with_stats(audio: &AudioBuffer, cfg: &FeatureConfig) -> Result<(FeatureMatrix, LpcStats)> {
    run(&Extractor::new(cfg.clone())?, audio)
}

pub(super) fn run(ex: &Extractor, audio: &AudioBuffer) -> Result<(FeatureMatrix, LpcStats)> {
    let order = ex.cfg.lsf_order;
    let a = analyze(audio, &ex.cfg)?;
    let frames = &a.frames.frames;
    let mut out = Matrix::zeros(frames.rows(), order);
    let mut stats = LpcStats { frames: frames.rows(), substituted: 0 };
    let mut prev = default_lsf(order);
    for (i, frame) in frames.iter_rows().enumerate() {
        let r = autocorrelation(frame, order)?;
        match levinson_durbin(&r, order) {
            Ok(lpc) => {
                prev = lpc_to_lsf(&lpc.coeffs).map_err(|found| Error::LsfRootSearch {
                    frame: i,
                    found,
                    expected: order,
                })?;
            }
            Err(_) => stats.substituted += 1,
        }
        out.row_mut(i).copy_from_slice(&prev);
    }
    Ok((FeatureMatrix::new(out, FeatureKind::Lsf, false, ex.cfg.frame_rate())?, stats))
}

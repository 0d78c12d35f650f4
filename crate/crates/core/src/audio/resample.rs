use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use super::AudioBuffer;
use crate::error::{Error, Result};

/// Taps per polyphase branch.
const TAPS: usize = 64;
const HALF: i64 = (TAPS / 2) as i64;
const KAISER_BETA: f64 = 8.0;
/// Fraction of the output Nyquist frequency kept as passband-plus-transition.
const ROLLOFF: f64 = 0.92;
/// Largest phase count for which the branch table is precomputed.
const MAX_TABLE_PHASES: u64 = 4096;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Branch coefficients for fractional delay `frac` in [0, 1); tap `j`
/// weights input sample `i + j - HALF + 1`. Normalized to unit DC gain.
fn branch(frac: f64, cutoff: f64, i0_beta: f64, out: &mut [f64]) {
    let mut sum = 0.0;
    for (j, h) in out.iter_mut().enumerate() {
        let tau = (j as i64 - HALF + 1) as f64 - frac;
        let r = tau / HALF as f64;
        let w = if r.abs() <= 1.0 { bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / i0_beta } else { 0.0 };
        *h = 2.0 * cutoff * sinc(2.0 * cutoff * tau) * w;
        sum += *h;
    }
    for h in out.iter_mut() {
        *h /= sum;
    }
}

/// Polyphase windowed-sinc sample-rate conversion (Kaiser window, 64 taps
/// per phase). Output length is `round(n * target / source)`; equal rates
/// return the input unchanged.
pub fn resample(buffer: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    if target_rate == 0 {
        return Err(Error::InvalidSampleRate);
    }
    let src = buffer.sample_rate() as u64;
    let dst = target_rate as u64;
    if src == dst {
        return Ok(buffer.clone());
    }
    let g = gcd(src, dst);
    let phases = dst / g;
    let step = src / g;
    let x = buffer.samples();
    let n_in = x.len() as u64;
    let n_out = (n_in * dst + src / 2) / src;

    // Cutoff in cycles per input sample.
    let cutoff = 0.5 * ROLLOFF * (dst as f64 / src as f64).min(1.0);
    let i0_beta = bessel_i0(KAISER_BETA);

    let table: Option<Vec<f64>> = (phases <= MAX_TABLE_PHASES).then(|| {
        let mut t = vec![0.0; phases as usize * TAPS];
        for (p, chunk) in t.chunks_exact_mut(TAPS).enumerate() {
            branch(p as f64 / phases as f64, cutoff, i0_beta, chunk);
        }
        t
    });
    let mut scratch = [0.0; TAPS];

    let mut out = Vec::with_capacity(n_out as usize);
    for n in 0..n_out {
        let pos = n * step;
        let base = (pos / phases) as i64;
        let phase = pos % phases;
        let taps: &[f64] = match &table {
            Some(t) => &t[phase as usize * TAPS..(phase as usize + 1) * TAPS],
            None => {
                branch(phase as f64 / phases as f64, cutoff, i0_beta, &mut scratch);
                &scratch
            }
        };
        let mut acc = 0.0;
        for (j, h) in taps.iter().enumerate() {
            let idx = base + j as i64 - HALF + 1;
            if idx >= 0 && (idx as u64) < n_in {
                acc += h * x[idx as usize];
            }
        }
        out.push(acc);
    }
    AudioBuffer::new(out, target_rate)
}

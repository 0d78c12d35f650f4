use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};

/// `r[k] = Σ x[n] x[n+k]` for `k = 0..=max_lag`.
pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag >= frame.len() {
        return Err(Error::InvalidArgument(alloc::format!("lag {max_lag} needs a frame longer than {}", frame.len())));
    }
    Ok((0..=max_lag).map(|k| frame[k..].iter().zip(frame).map(|(a, b)| a * b).sum()).collect())
}

/// All-pole model from the Levinson-Durbin recursion.
///
/// `coeffs[k - 1]` is the predictor weight `a_k` in
/// `x̂[n] = Σ a_k x[n - k]`, so the inverse filter is `A(z) = 1 - Σ a_k z^-k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lpc {
    pub coeffs: Vec<f64>,
    pub reflection: Vec<f64>,
    /// Final forward prediction error power.
    pub gain: f64,
}

impl Lpc {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Inverse-filter polynomial `[1, -a_1, …, -a_p]` in powers of `z^-1`.
    pub fn inverse_filter(&self) -> Vec<f64> {
        core::iter::once(1.0).chain(self.coeffs.iter().map(|a| -a)).collect()
    }
}

pub fn levinson_durbin(r: &[f64], order: usize) -> Result<Lpc> {
    if r.len() < order + 1 {
        return Err(Error::InvalidArgument(alloc::format!(
            "order {order} needs {} autocorrelation lags, got {}",
            order + 1,
            r.len()
        )));
    }
    if !(r[0] > 0.0) {
        return Err(Error::NonPositiveEnergy);
    }
    let mut a = alloc::vec![0.0; order];
    let mut prev = alloc::vec![0.0; order];
    let mut reflection = Vec::with_capacity(order);
    let mut err = r[0];
    for i in 0..order {
        let acc = r[i + 1] - (0..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        let k = acc / err;
        if !(k.abs() < 1.0) {
            return Err(Error::UnstableLpc { order: i + 1, reflection: k });
        }
        prev[..i].copy_from_slice(&a[..i]);
        a[i] = k;
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        reflection.push(k);
        err *= 1.0 - k * k;
    }
    Ok(Lpc { coeffs: a, reflection, gain: err })
}

/// Cepstrum of the all-pole model `gain / A(z)`: `c0 = ln(gain)` followed by
/// the standard recursion, `n_ceps` values in total.
pub fn lpc_to_cepstrum(lpc: &Lpc, n_ceps: usize) -> Vec<f64> {
    let p = lpc.order();
    let a = &lpc.coeffs;
    let mut c = Vec::with_capacity(n_ceps);
    if n_ceps == 0 {
        return c;
    }
    c.push(lpc.gain.ln());
    for n in 1..n_ceps {
        let mut v = if n <= p { a[n - 1] } else { 0.0 };
        for k in 1..n {
            if n - k <= p {
                v += (k as f64 / n as f64) * c[k] * a[n - k - 1];
            }
        }
        c.push(v);
    }
    c
}

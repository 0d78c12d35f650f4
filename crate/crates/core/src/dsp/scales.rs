use num_traits::Float;

use crate::error::{Error, Result};

fn check_freq(f: f64) -> Result<()> {
    if f >= 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(alloc::format!("frequency {f} Hz must be finite and non-negative")))
    }
}

/// Hz to mel: `2595 log10(1 + f / 700)`.
pub fn mel_scale(f: f64) -> Result<f64> {
    check_freq(f)?;
    Ok(2595.0 * (1.0 + f / 700.0).log10())
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10.0.powf(mel / 2595.0) - 1.0)
}

/// Equivalent rectangular bandwidth in Hz: `24.7 (4.37 f / 1000 + 1)`.
pub fn erb(f: f64) -> Result<f64> {
    check_freq(f)?;
    Ok(24.7 * (4.37 * f / 1000.0 + 1.0))
}

const ERB_RATE_SCALE: f64 = 1000.0 / (24.7 * 4.37);

/// Number of ERBs below `f`: the integral of `1 / erb` from 0 to `f`.
pub fn erb_rate(f: f64) -> f64 {
    ERB_RATE_SCALE * (1.0 + 4.37 * f / 1000.0).ln()
}

pub fn erb_rate_inverse(e: f64) -> f64 {
    ((e / ERB_RATE_SCALE).exp() - 1.0) * 1000.0 / 4.37
}

/// Hz to Bark, `6 asinh(f / 600)`.
pub fn bark_scale(f: f64) -> f64 {
    6.0 * (f / 600.0).asinh()
}

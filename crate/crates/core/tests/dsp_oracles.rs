// The oracles index explicitly, like the textbook sums.
#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use cepstra_core::audio::{frame_samples, AudioBuffer, Window};
use cepstra_core::dsp::{
    apply_filterbank, autocorrelation, dct_ii, gammatone_filterbank, mel_filterbank, power_spectrum, Dct,
    PowerSpectrumSequence,
};
use cepstra_core::Matrix;
use proptest::prelude::*;

fn direct_power(x: &[f64], n: usize) -> Vec<f64> {
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let a = -2.0 * PI * (k * t % n) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            re * re + im * im
        })
        .collect()
}

fn direct_dct(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n)).cos())
                    .sum::<f64>()
        })
        .collect()
}

fn signal(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

proptest! {
    #[test]
    fn power_spectrum_matches_dft((log_n, x) in (2u32..10).prop_flat_map(|p| (Just(p), signal(1 << p)))) {
        let n = 1usize << log_n;
        let frame_len = x.len() - x.len() / 3;
        let buf = AudioBuffer::new(x[..frame_len].to_vec(), 8000).unwrap();
        let frames = frame_samples(&buf, frame_len, frame_len, Window::Rect).unwrap();
        let spec = power_spectrum(&frames, n).unwrap();
        let want = direct_power(&x[..frame_len], n);
        let scale = want.iter().fold(1e-300f64, |a, b| a.max(*b));
        for (a, b) in spec.values.row(0).iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn parseval(x in (2u32..10).prop_flat_map(|p| signal(1 << p))) {
        let n = x.len();
        let buf = AudioBuffer::new(x.clone(), 8000).unwrap();
        let frames = frame_samples(&buf, n, n, Window::Rect).unwrap();
        let spec = power_spectrum(&frames, n).unwrap();
        let one_sided = spec.values.row(0);
        // Interior bins appear twice in the full spectrum.
        let full: f64 = (0..n).map(|k| one_sided[if k <= n / 2 { k } else { n - k }]).sum();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        prop_assert!((full / n as f64 - energy).abs() <= 1e-9 * energy.max(1e-300));
    }

    #[test]
    fn dct_matches_direct_matrix(x in prop::collection::vec(-50.0f64..50.0, 1..80), frac in 0.0f64..1.0) {
        let n_out = 1 + ((x.len() - 1) as f64 * frac) as usize;
        let got = dct_ii(&x, n_out).unwrap();
        let want = direct_dct(&x, n_out);
        let scale = x.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-12 * scale * (x.len() as f64).sqrt());
        }
    }

    #[test]
    fn filterbank_matches_double_loop(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..4.0, 129), 1..6),
        n_filters in 1usize..30,
    ) {
        let bank = mel_filterbank(n_filters, 256, 8000, 0.0, 4000.0).unwrap();
        let spec = PowerSpectrumSequence { values: Matrix::from_rows(129, &rows).unwrap(), bin_hz: 8000.0 / 256.0 };
        let got = apply_filterbank(&spec, &bank).unwrap();
        for (i, row) in rows.iter().enumerate() {
            for c in 0..n_filters {
                let mut acc = 0.0;
                for k in 0..129 {
                    acc += bank.weights().get(c, k) * row[k];
                }
                prop_assert!((got.get(i, c) - acc).abs() <= 1e-10 * acc.abs().max(1.0));
            }
        }
    }

    #[test]
    fn autocorrelation_matches_loop(x in prop::collection::vec(-1.0f64..1.0, 2..300), lag_frac in 0.0f64..1.0) {
        let max_lag = ((x.len() - 1) as f64 * lag_frac) as usize;
        let r = autocorrelation(&x, max_lag).unwrap();
        for k in 0..=max_lag {
            let mut acc = 0.0;
            for n in 0..x.len() - k {
                acc += x[n] * x[n + k];
            }
            prop_assert!((r[k] - acc).abs() <= 1e-10 * r[0].max(1e-300));
        }
    }
}

#[test]
fn dct_basis_is_orthonormal() {
    for n in [1usize, 2, 13, 26, 64] {
        let dct = Dct::new(n, n).unwrap();
        let basis: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                let mut out = vec![0.0; n];
                dct.apply(&e, &mut out);
                out
            })
            .collect();
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|i| basis[i][a] * basis[i][b]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12, "n={n} ({a},{b}) {dot}");
            }
        }
    }
}

#[test]
fn gammatone_rows_are_peak_normalized_and_ordered() {
    let bank = gammatone_filterbank(64, 512, 16000, 50.0, 8000.0, 4).unwrap();
    assert_eq!(bank.n_channels(), 64);
    for c in 0..64 {
        let peak = bank.weights().row(c).iter().cloned().fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-12);
    }
    assert!(bank.center_freqs().windows(2).all(|w| w[1] > w[0]));
    assert!((bank.center_freqs()[0] - 50.0).abs() < 1e-9);
    assert!((bank.center_freqs()[63] - 8000.0).abs() < 1e-6);
}

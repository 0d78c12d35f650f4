use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

/// In-place radix-2 FFT over split real/imaginary buffers.
/// Length must be a power of two.
pub struct Fft {
    size: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Fft {
    pub fn new(size: usize) -> Self {
        assert!(size.is_power_of_two(), "FFT size must be a power of two");
        let half = size / 2;
        let (cos, sin) = (0..half)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / size as f64;
                (a.cos(), a.sin())
            })
            .unzip();
        Self { size, cos, sin }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        let n = self.size;
        assert_eq!(re.len(), n);
        assert_eq!(im.len(), n);
        if n < 2 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                re.swap(i, j);
                im.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let (wr, wi) = (self.cos[k * stride], self.sin[k * stride]);
                    let a = start + k;
                    let b = a + half;
                    let tr = re[b] * wr - im[b] * wi;
                    let ti = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            len *= 2;
        }
    }
}

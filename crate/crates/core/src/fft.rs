//! Radix-2 complex FFT for power-of-two lengths.
//!
//! Convention: the forward transform is unnormalized,
//! `F[k] = Σ_j f[j] e^{-2πi jk/n}`, and the inverse carries the `1/n` factor.
//! Butterflies run in a fixed order, so results are bit-reproducible.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    bitrev: Vec<u32>,
    twiddles: Vec<Complex64>,
}

impl Fft {
    /// Plans a transform of length `n`; `n` must be a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT length must be a power of two");
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -TAU * k as f64 / n as f64;
                Complex64::new(a.cos(), a.sin())
            })
            .collect();
        Self { n, bitrev, twiddles }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.process(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.process(data, true);
        let scale = 1.0 / self.n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn process(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.bitrev[i] as usize;
            if j > i {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                let (lo, hi) = data[start..start + len].split_at_mut(half);
                for j in 0..half {
                    let mut w = self.twiddles[j * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let u = lo[j];
                    let v = hi[j] * w;
                    lo[j] = u + v;
                    hi[j] = u - v;
                }
            }
            len <<= 1;
        }
    }
}

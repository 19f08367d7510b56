//! Complex FFT used for the periodic directions.
//!
//! Power-of-two lengths use an iterative radix-2 transform; other lengths
//! fall back to a direct DFT with a precomputed twiddle table. Both are
//! unnormalized in the forward direction.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

pub struct Fft {
    n: usize,
    /// `twiddles[m] = exp(-2 pi i m / n)`
    twiddles: Vec<Complex64>,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "FFT length must be positive");
        let twiddles = (0..n)
            .map(|m| {
                let ang = -2.0 * PI * (m as f64) / (n as f64);
                Complex64::new(libm::cos(ang), libm::sin(ang))
            })
            .collect();
        Fft { n, twiddles }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `X_k = sum_j x_j exp(-2 pi i j k / n)`
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// `x_j = sum_k X_k exp(+2 pi i j k / n)` (no `1/n` factor).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    fn twiddle(&self, m: usize, inverse: bool) -> Complex64 {
        let w = self.twiddles[m % self.n];
        if inverse {
            w.conj()
        } else {
            w
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.n, "FFT buffer length mismatch");
        if self.n == 1 {
            return;
        }
        if self.n.is_power_of_two() {
            self.radix2(data, inverse);
        } else {
            self.direct(data, inverse);
        }
    }

    fn radix2(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddle(k * stride, inverse);
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }

    fn direct(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, x) in data.iter().enumerate() {
                acc += *x * self.twiddle((j * k) % n, inverse);
            }
            *o = acc;
        }
        data.copy_from_slice(&out);
    }
}

/// Signed wavenumber of FFT bin `k` for derivative purposes. The Nyquist bin
/// of an even-length transform has no well-defined real derivative and maps
/// to zero.
pub fn derivative_wavenumber(k: usize, n: usize) -> f64 {
    if 2 * k < n {
        k as f64
    } else if 2 * k == n {
        0.0
    } else {
        k as f64 - n as f64
    }
}

/// `|k|` of FFT bin `k`, Nyquist included.
pub fn abs_wavenumber(k: usize, n: usize) -> f64 {
    if 2 * k <= n {
        k as f64
    } else {
        (n - k) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let ang = -2.0 * PI * (j * k) as f64 / n as f64;
                        *v * Complex64::new(libm::cos(ang), libm::sin(ang))
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum() {
        for n in [1usize, 2, 6, 8, 12, 16, 64] {
            let x: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new(libm::sin(j as f64 * 0.7) + 0.1, libm::cos(j as f64)))
                .collect();
            let mut y = x.clone();
            Fft::new(n).forward(&mut y);
            let want = dft(&x);
            for (a, b) in y.iter().zip(&want) {
                assert!((a - b).norm() < 1e-11 * (n as f64), "n={n}");
            }
            Fft::new(n).inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a / n as f64 - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn wavenumbers() {
        assert_eq!(derivative_wavenumber(3, 8), 3.0);
        assert_eq!(derivative_wavenumber(4, 8), 0.0);
        assert_eq!(derivative_wavenumber(5, 8), -3.0);
        assert_eq!(abs_wavenumber(4, 8), 4.0);
        assert_eq!(abs_wavenumber(7, 8), 1.0);
    }
}

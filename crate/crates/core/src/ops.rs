//! Differential operators, averages and Sobolev norms.
//!
//! `d1` is spectral in the periodic coordinate. `d2` is the second-order
//! centred difference on the channel (one-sided second-order stencils at the
//! walls) and spectral on the torus. Both act on separate indices, so they
//! commute exactly.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{abs_wavenumber, derivative_wavenumber, Fft};
use crate::field::{ChannelField, ScalarField};
use crate::grid::{Domain, Grid};

pub const MAX_SOBOLEV_ORDER: usize = 4;

/// Fourier coefficients in `x1`: `data[k * n2 + i2] = (1/n1) sum_i1 f e^{-i k x1}`.
pub(crate) fn forward_x1(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
    let (n1, n2) = (grid.n1(), grid.n2());
    let fft = Fft::new(n1);
    let mut out = vec![Complex64::new(0.0, 0.0); n1 * n2];
    let mut buf = vec![Complex64::new(0.0, 0.0); n1];
    let inv = 1.0 / n1 as f64;
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            buf[i1] = Complex64::new(values[i1 * n2 + i2], 0.0);
        }
        fft.forward(&mut buf);
        for k in 0..n1 {
            out[k * n2 + i2] = buf[k] * inv;
        }
    }
    out
}

/// Inverse of [`forward_x1`]; returns the real part.
pub(crate) fn inverse_x1(grid: &Grid, data: &[Complex64]) -> Vec<f64> {
    let (n1, n2) = (grid.n1(), grid.n2());
    let fft = Fft::new(n1);
    let mut out = vec![0.0; n1 * n2];
    let mut buf = vec![Complex64::new(0.0, 0.0); n1];
    for i2 in 0..n2 {
        for k in 0..n1 {
            buf[k] = data[k * n2 + i2];
        }
        fft.inverse(&mut buf);
        for i1 in 0..n1 {
            out[i1 * n2 + i2] = buf[i1].re;
        }
    }
    out
}

/// One-dimensional real FFT coefficients `(1/n) sum_j f_j e^{-i k x_j}`.
pub(crate) fn forward_1d(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Fft::new(n).forward(&mut buf);
    let inv = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= inv);
    buf
}

/// Stencil of the first-difference operator at node `j` of `n` nodes, to be
/// scaled by `1 / (2h)`.
pub(crate) fn fd_stencil(j: usize, n: usize) -> [(usize, f64); 3] {
    if j == 0 {
        [(0, -3.0), (1, 4.0), (2, -1.0)]
    } else if j + 1 == n {
        [(n - 1, 3.0), (n - 2, -4.0), (n - 3, 1.0)]
    } else {
        [(j - 1, -1.0), (j + 1, 1.0), (j, 0.0)]
    }
}

pub(crate) fn fd_derivative<T>(col: &[T], h: f64, out: &mut [T])
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = col.len();
    let s = 0.5 / h;
    out[0] = (col[1] * 4.0 - col[0] * 3.0 - col[2]) * s;
    for j in 1..n - 1 {
        out[j] = (col[j + 1] - col[j - 1]) * s;
    }
    out[n - 1] = (col[n - 1] * 3.0 - col[n - 2] * 4.0 + col[n - 3]) * s;
}

/// `d^m / dx1^m`, spectral. The Nyquist mode is dropped for `m >= 1`.
pub fn d1_pow(f: &ScalarField, m: u32) -> ScalarField {
    if m == 0 {
        return f.clone();
    }
    let grid = *f.grid();
    let (n1, n2) = (grid.n1(), grid.n2());
    let mut hat = forward_x1(&grid, f.values());
    let i = Complex64::new(0.0, 1.0);
    for k in 0..n1 {
        let factor = (i * derivative_wavenumber(k, n1)).powu(m);
        for c in &mut hat[k * n2..(k + 1) * n2] {
            *c *= factor;
        }
    }
    ScalarField::from_parts(grid, inverse_x1(&grid, &hat))
}

pub fn d1(f: &ScalarField) -> ScalarField {
    d1_pow(f, 1)
}

/// Derivative in the second coordinate.
pub fn d2(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let (n1, n2) = (grid.n1(), grid.n2());
    let mut out = vec![0.0; grid.len()];
    match grid.domain() {
        Domain::Channel { .. } | Domain::Disk => {
            let h = grid.h2();
            for i1 in 0..n1 {
                fd_derivative(f.row(i1), h, &mut out[i1 * n2..(i1 + 1) * n2]);
            }
        }
        Domain::Torus => {
            let fft = Fft::new(n2);
            let mut buf = vec![Complex64::new(0.0, 0.0); n2];
            for i1 in 0..n1 {
                for (b, &v) in buf.iter_mut().zip(f.row(i1)) {
                    *b = Complex64::new(v, 0.0);
                }
                fft.forward(&mut buf);
                for (k, b) in buf.iter_mut().enumerate() {
                    *b *= Complex64::new(0.0, derivative_wavenumber(k, n2) / n2 as f64);
                }
                fft.inverse(&mut buf);
                for (o, b) in out[i1 * n2..(i1 + 1) * n2].iter_mut().zip(&buf) {
                    *o = b.re;
                }
            }
        }
    }
    ScalarField::from_parts(grid, out)
}

pub fn d2_pow(f: &ScalarField, m: u32) -> ScalarField {
    let mut g = f.clone();
    for _ in 0..m {
        g = d2(&g);
    }
    g
}

/// `x1`-average as a function of `x2`.
pub fn p0_profile(f: &ScalarField) -> Vec<f64> {
    let g = f.grid();
    let mut p = vec![0.0; g.n2()];
    for i1 in 0..g.n1() {
        for (a, v) in p.iter_mut().zip(f.row(i1)) {
            *a += v;
        }
    }
    let inv = 1.0 / g.n1() as f64;
    p.iter_mut().for_each(|a| *a *= inv);
    p
}

/// `P0 f`: the `x1`-average, extended as a field.
pub fn p0(f: &ScalarField) -> ScalarField {
    let prof = p0_profile(f);
    let g = *f.grid();
    let values = (0..g.len()).map(|k| prof[k % g.n2()]).collect();
    ScalarField::from_parts(g, values)
}

/// `P_perp f = f - P0 f`.
pub fn pperp(f: &ScalarField) -> ScalarField {
    f.sub(&p0(f))
}

pub fn p0_vec(v: &ChannelField) -> ChannelField {
    ChannelField { c1: p0(&v.c1), c2: p0(&v.c2) }
}

pub fn pperp_vec(v: &ChannelField) -> ChannelField {
    ChannelField { c1: pperp(&v.c1), c2: pperp(&v.c2) }
}

pub fn divergence(v: &ChannelField) -> ScalarField {
    d1(&v.c1).add(&d2(&v.c2))
}

/// `(-d2 psi, d1 psi)`.
pub fn curl_of_stream(psi: &ScalarField) -> ChannelField {
    ChannelField { c1: d2(psi).scale(-1.0), c2: d1(psi) }
}

/// `(v . grad) f`.
pub fn advect(v: &ChannelField, f: &ScalarField) -> ScalarField {
    v.c1.mul(&d1(f)).add(&v.c2.mul(&d2(f)))
}

/// `(v . grad) w`, componentwise.
pub fn advect_vec(v: &ChannelField, w: &ChannelField) -> ChannelField {
    ChannelField { c1: advect(v, &w.c1), c2: advect(v, &w.c2) }
}

/// Squared `H^k` norm, `sum_{|alpha| <= k} ||d^alpha f||^2`, with the
/// `x1` part evaluated by Parseval.
pub fn sobolev_norm_sq(f: &ScalarField, k: usize) -> Result<f64> {
    if k > MAX_SOBOLEV_ORDER {
        return Err(Error::OrderTooHigh { order: k, max: MAX_SOBOLEV_ORDER });
    }
    let grid = *f.grid();
    if grid.domain() == Domain::Disk {
        return Err(Error::Unsupported("Sobolev norms on the disk grid"));
    }
    let (n1, n2) = (grid.n1(), grid.n2());
    let mut total = 0.0;
    let mut g = f.clone();
    for a2 in 0..=k {
        if a2 > 0 {
            g = d2(&g);
        }
        let hat = forward_x1(&grid, g.values());
        for kk in 0..n1 {
            let kd = derivative_wavenumber(kk, n1);
            let mut row = 0.0;
            for i2 in 0..n2 {
                row += grid.weight2(i2) * hat[kk * n2 + i2].norm_sqr();
            }
            let mut w = 0.0;
            let mut pow = 1.0;
            for _a1 in 0..=(k - a2) {
                w += pow;
                pow *= kd * kd;
            }
            total += 2.0 * core::f64::consts::PI * w * row;
        }
    }
    Ok(total)
}

pub fn sobolev_norm(f: &ScalarField, k: usize) -> Result<f64> {
    Ok(libm::sqrt(sobolev_norm_sq(f, k)?))
}

pub fn sobolev_norm_vec(v: &ChannelField, k: usize) -> Result<f64> {
    Ok(libm::sqrt(sobolev_norm_sq(&v.c1, k)? + sobolev_norm_sq(&v.c2, k)?))
}

/// Constants `c` in `||P_perp f|| <= c ||d1 P_perp f||` on `T x (-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareConstant {
    /// `1 / (smallest nonzero |k|) = 1`.
    pub sharp: f64,
    /// Length of the period.
    pub crude: f64,
}

pub fn poincare_constant() -> PoincareConstant {
    PoincareConstant { sharp: 1.0, crude: 2.0 * core::f64::consts::PI }
}

/// Largest `|k|` whose mode carries energy above `rel_tol` relative to the
/// total; used by tests and by the CFL estimate.
pub fn max_active_wavenumber(f: &ScalarField, rel_tol: f64) -> f64 {
    let grid = *f.grid();
    let (n1, n2) = (grid.n1(), grid.n2());
    let hat = forward_x1(&grid, f.values());
    let energy: Vec<f64> = (0..n1)
        .map(|k| hat[k * n2..(k + 1) * n2].iter().map(|c| c.norm_sqr()).sum())
        .collect();
    let total: f64 = energy.iter().sum();
    (0..n1)
        .filter(|&k| energy[k] > rel_tol * total)
        .map(|k| abs_wavenumber(k, n1))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use libm::{cos, sin};

    fn chan(n1: usize, n2: usize) -> Grid {
        Grid::channel(n1, n2).unwrap()
    }

    #[test]
    fn d1_is_spectral() {
        let g = chan(16, 9);
        let f = ScalarField::from_fn(g, |x1, x2| sin(3.0 * x1) * x2).unwrap();
        let df = d1(&f);
        let want = ScalarField::from_fn(g, |x1, x2| 3.0 * cos(3.0 * x1) * x2).unwrap();
        assert!(df.sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn d2_exact_on_quadratics() {
        let g = chan(8, 11);
        let f = ScalarField::from_fn(g, |x1, x2| cos(x1) * (x2 * x2 - 0.5 * x2)).unwrap();
        let want = ScalarField::from_fn(g, |x1, x2| cos(x1) * (2.0 * x2 - 0.5)).unwrap();
        assert!(d2(&f).sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn d2_second_order() {
        let err = |n2| {
            let g = chan(8, n2);
            let f = ScalarField::from_fn(g, |_, x2| sin(2.0 * x2)).unwrap();
            let want = ScalarField::from_fn(g, |_, x2| 2.0 * cos(2.0 * x2)).unwrap();
            d2(&f).sub(&want).max_abs()
        };
        let ratio = err(33) / err(65);
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn torus_d2_spectral() {
        let g = Grid::torus(8, 16).unwrap();
        let f = ScalarField::from_fn(g, |x, y| sin(x) * cos(3.0 * y)).unwrap();
        let want = ScalarField::from_fn(g, |x, y| -3.0 * sin(x) * sin(3.0 * y)).unwrap();
        assert!(d2(&f).sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn projections_split() {
        let g = chan(16, 9);
        let f = ScalarField::from_fn(g, |x1, x2| 1.0 + x2 + sin(x1) * x2 * x2).unwrap();
        let a = p0(&f);
        assert!(a.sub(&ScalarField::from_fn(g, |_, x2| 1.0 + x2).unwrap()).max_abs() < 1e-14);
        assert!(p0(&pperp(&f)).max_abs() < 1e-14);
    }

    #[test]
    fn sobolev_norm_single_mode() {
        // f = sin(2 x1): ||d1^a f||^2 = 2 pi * 4^a.
        let g = chan(16, 17);
        let f = ScalarField::from_fn(g, |x1, _| sin(2.0 * x1)).unwrap();
        let want: f64 = (0..=3).map(|a| 2.0 * PI * libm::pow(4.0, a as f64)).sum();
        assert!((sobolev_norm_sq(&f, 3).unwrap() - want).abs() < 1e-9 * want);
        assert_eq!(sobolev_norm(&f, 5), Err(Error::OrderTooHigh { order: 5, max: 4 }));
    }

    #[test]
    fn sobolev_norm_counts_mixed_derivatives() {
        // f = x2 sin x1 on a fine grid; d2 is exact on linear functions.
        let g = chan(8, 9);
        let f = ScalarField::from_fn(g, |x1, x2| x2 * sin(x1)).unwrap();
        // ||f||^2 = pi * 2/3, ||d1 f||^2 = same, ||d2 f||^2 = 2 pi (trapezoid of x2^2 on
        // 9 nodes is 0.6875 instead of 2/3).
        let tz: f64 = (0..9).map(|j| g.weight2(j) * g.x2(j) * g.x2(j)).sum();
        let want = PI * tz * 2.0 + PI * 2.0;
        assert!((sobolev_norm_sq(&f, 1).unwrap() - want).abs() < 1e-12);
    }
}

//! Neumann pressure solve, Leray projection and stream functions on the
//! channel.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::banded::{solve_tridiagonal, BandMatrix};
use crate::error::{Error, Result};
use crate::fft::{abs_wavenumber, derivative_wavenumber};
use crate::field::{ChannelField, ScalarField};
use crate::grid::{Domain, Grid};
use crate::ops::{self, fd_stencil, forward_1d, forward_x1, inverse_x1};

/// Relative tolerance of the Neumann compatibility condition.
pub const TOL_COMPAT: f64 = 1e-8;

fn require_channel(grid: &Grid) -> Result<(f64, f64)> {
    match grid.domain() {
        Domain::Channel { lo, hi } => Ok((lo, hi)),
        _ => Err(Error::Unsupported("channel grid required")),
    }
}

fn wall_norm(values: &[f64]) -> f64 {
    let h = 2.0 * core::f64::consts::PI / values.len() as f64;
    libm::sqrt(h * values.iter().map(|v| v * v).sum::<f64>())
}

/// Solves `Lap p = rhs` with `d2 p = top` at `x2 = hi` and `d2 p = bot` at
/// `x2 = lo`, normalized to zero mean.
///
/// Each `x1` mode is a three-point problem with ghost-point boundary rows.
/// The `k = 0` problem is singular; its discrete compatibility condition is
/// `int rhs = int_top g - int_bot g` with the trapezoid rule. A defect up to
/// `TOL_COMPAT * (||rhs|| + ||top|| + ||bot||)` is projected out, larger ones
/// are rejected.
pub fn neumann_solve(rhs: &ScalarField, top: &[f64], bot: &[f64]) -> Result<ScalarField> {
    neumann_solve_scaled(rhs, top, bot, 0.0)
}

/// [`neumann_solve`] with the compatibility tolerance measured against
/// `max(||rhs|| + ||top|| + ||bot||, scale)`. Callers whose `rhs` is a
/// divergence pass the norm of the differentiated field, so that rounding
/// noise in an exactly compatible problem is not mistaken for a defect.
pub fn neumann_solve_scaled(
    rhs: &ScalarField,
    top: &[f64],
    bot: &[f64],
    scale: f64,
) -> Result<ScalarField> {
    let grid = *rhs.grid();
    let (lo, hi) = require_channel(&grid)?;
    let (n1, n2) = (grid.n1(), grid.n2());
    if top.len() != n1 || bot.len() != n1 {
        return Err(Error::ShapeMismatch(format!(
            "boundary data must have {n1} values, got {} and {}",
            top.len(),
            bot.len()
        )));
    }
    if let Some(index) = top.iter().chain(bot).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let h = grid.h2();
    let mut r = forward_x1(&grid, rhs.values());
    let t = forward_1d(top);
    let b = forward_1d(bot);

    let len = hi - lo;
    let mean_defect: f64 =
        (0..n2).map(|j| grid.weight2(j) * r[j].re).sum::<f64>() - (t[0].re - b[0].re);
    let defect = 2.0 * core::f64::consts::PI * mean_defect;
    let tol = TOL_COMPAT * (rhs.l2_norm() + wall_norm(top) + wall_norm(bot)).max(scale);
    if defect.abs() > tol {
        return Err(Error::Compatibility { defect: defect.abs(), tol });
    }
    for j in 0..n2 {
        r[j] -= mean_defect / len;
    }

    let inv_h2 = 1.0 / (h * h);
    let mut lower = vec![inv_h2; n2];
    let mut upper = vec![inv_h2; n2];
    upper[0] = 2.0 * inv_h2;
    lower[n2 - 1] = 2.0 * inv_h2;
    let mut diag = vec![0.0; n2];
    let mut col = vec![Complex64::new(0.0, 0.0); n2];
    let mut p = vec![Complex64::new(0.0, 0.0); n1 * n2];
    for k in 0..=n1 / 2 {
        let k2 = abs_wavenumber(k, n1).powi(2);
        diag.iter_mut().for_each(|d| *d = -2.0 * inv_h2 - k2);
        col.copy_from_slice(&r[k * n2..(k + 1) * n2]);
        col[0] += b[k] * (2.0 / h);
        col[n2 - 1] -= t[k] * (2.0 / h);
        let mut up = upper.clone();
        if k == 0 {
            diag[0] = 1.0;
            up[0] = 0.0;
            col[0] = Complex64::new(0.0, 0.0);
        }
        solve_tridiagonal(&lower, &diag, &up, &mut col)?;
        if k == 0 {
            let mean: f64 = (0..n2).map(|j| grid.weight2(j) * col[j].re).sum::<f64>() / len;
            col.iter_mut().for_each(|c| *c = Complex64::new(c.re - mean, 0.0));
        }
        p[k * n2..(k + 1) * n2].copy_from_slice(&col);
        if k > 0 && 2 * k < n1 {
            for j in 0..n2 {
                p[(n1 - k) * n2 + j] = col[j].conj();
            }
        }
    }
    ScalarField::new(grid, inverse_x1(&grid, &p))
}

/// Gradient of a Neumann solution, with the prescribed normal derivative in
/// place of the one-sided difference on the walls.
pub fn neumann_gradient(p: &ScalarField, top: &[f64], bot: &[f64]) -> ChannelField {
    let grid = *p.grid();
    let mut c2 = ops::d2(p);
    let n2 = grid.n2();
    for i1 in 0..grid.n1() {
        c2.values_mut()[i1 * n2] = bot[i1];
        c2.values_mut()[i1 * n2 + n2 - 1] = top[i1];
    }
    ChannelField { c1: ops::d1(p), c2 }
}

/// Leray projection onto solenoidal fields tangent to the walls.
///
/// For every `x1` mode `k != 0` the output is the discrete curl
/// `(-D2 psi, i k psi)` of the stream function solving
/// `(-D2 D2 + k^2) psi = D2 h1 - i k h2` on the interior with `psi = 0` on
/// the walls. The result is divergence free and tangent to round-off,
/// discrete gradients `(ik phi, D2 phi)` are annihilated exactly, and the
/// map is idempotent. The mean mode keeps `h1` and drops `h2`. The Nyquist
/// mode, which `d1` cannot see, is removed.
pub fn leray(h: &ChannelField) -> Result<ChannelField> {
    let grid = *h.grid();
    require_channel(&grid)?;
    let (n1, n2) = (grid.n1(), grid.n2());
    let hh = grid.h2();
    let s = 0.5 / hh;
    let m = n2 - 2;
    let interior = |c: usize| c != 0 && c != n2 - 1;

    // -D2 D2 restricted to interior rows and columns.
    let mut base = BandMatrix::zeros(m, 2, 2);
    for j in 1..n2 - 1 {
        for &(a, ca) in &fd_stencil(j, n2) {
            if ca == 0.0 {
                continue;
            }
            for &(c, cc) in &fd_stencil(a, n2) {
                if cc != 0.0 && interior(c) {
                    base.add(j - 1, c - 1, -ca * cc * s * s);
                }
            }
        }
    }

    let h1 = forward_x1(&grid, h.c1.values());
    let h2 = forward_x1(&grid, h.c2.values());
    let zero = Complex64::new(0.0, 0.0);
    let mut o1 = vec![zero; n1 * n2];
    let mut o2 = vec![zero; n1 * n2];
    for j in 0..n2 {
        o1[j] = Complex64::new(h1[j].re, 0.0);
    }

    let mut psi = vec![zero; n2];
    let mut tmp = vec![zero; n2];
    for k in 1..n1 / 2 {
        let kd = derivative_wavenumber(k, n1);
        let ik = Complex64::new(0.0, kd);
        let a = &h1[k * n2..(k + 1) * n2];
        let b = &h2[k * n2..(k + 1) * n2];
        let mut mat = base.clone();
        for i in 0..m {
            mat.add(i, i, kd * kd);
        }
        let lu = mat.lu()?;
        ops::fd_derivative(a, hh, &mut tmp);
        let mut rhs: Vec<Complex64> = (1..n2 - 1).map(|j| tmp[j] - ik * b[j]).collect();
        lu.solve(&mut rhs);
        psi[0] = zero;
        psi[n2 - 1] = zero;
        psi[1..n2 - 1].copy_from_slice(&rhs);
        ops::fd_derivative(&psi, hh, &mut tmp);
        for j in 0..n2 {
            let v1 = -tmp[j];
            let v2 = ik * psi[j];
            o1[k * n2 + j] = v1;
            o2[k * n2 + j] = v2;
            o1[(n1 - k) * n2 + j] = v1.conj();
            o2[(n1 - k) * n2 + j] = v2.conj();
        }
    }
    Ok(ChannelField {
        c1: ScalarField::new(grid, inverse_x1(&grid, &o1))?,
        c2: ScalarField::new(grid, inverse_x1(&grid, &o2))?,
    })
}

/// Leray projection by the textbook route `h - grad p` with
/// `Lap p = div h`, `d2 p = h2` on the walls. The result is tangent exactly
/// but divergence free only to the truncation error of the compact
/// Laplacian. Kept as an independent check of [`leray`].
pub fn leray_neumann(h: &ChannelField) -> Result<ChannelField> {
    let grid = *h.grid();
    require_channel(&grid)?;
    let n2 = grid.n2();
    let div = ops::divergence(h);
    let top: Vec<f64> = (0..grid.n1()).map(|i| h.c2.get(i, n2 - 1)).collect();
    let bot: Vec<f64> = (0..grid.n1()).map(|i| h.c2.get(i, 0)).collect();
    let p = neumann_solve_scaled(&div, &top, &bot, ops::sobolev_norm_vec(h, 1)?)?;
    Ok(h.sub(&neumann_gradient(&p, &top, &bot)))
}

/// Residuals `(||div h||, max |h2| on the walls)` relative to `||h||_{H^1}`.
pub fn solenoidal_residual(h: &ChannelField) -> Result<(f64, f64)> {
    let scale = ops::sobolev_norm_vec(h, 1)?.max(f64::MIN_POSITIVE);
    let div = ops::divergence(h).l2_norm();
    Ok((div / scale, h.wall_normal() / h.max_abs().max(f64::MIN_POSITIVE)))
}

/// Stream function `psi` with `h = (-d2 psi, d1 psi)` and `psi = 0` on the
/// lower wall, by cumulative trapezoid integration of `-h1` in `x2`.
/// `h` must be solenoidal and tangent to relative accuracy `tol`.
pub fn stream_function(h: &ChannelField, tol: f64) -> Result<ScalarField> {
    let grid = *h.grid();
    require_channel(&grid)?;
    let (div, wall) = solenoidal_residual(h)?;
    let residual = div.max(wall);
    if residual > tol {
        return Err(Error::NotSolenoidal { residual, tol });
    }
    let (n1, n2) = (grid.n1(), grid.n2());
    let dh = grid.h2();
    let mut psi = vec![0.0; n1 * n2];
    for i1 in 0..n1 {
        let row = h.c1.row(i1);
        for j in 1..n2 {
            psi[i1 * n2 + j] = psi[i1 * n2 + j - 1] - 0.5 * dh * (row[j - 1] + row[j]);
        }
    }
    ScalarField::new(grid, psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use libm::{cos, cosh, sin, sinh};

    /// p = cos x1 cosh x2 + sin(2 x1) x2^3 + cos(pi x2)
    fn manufactured(n1: usize, n2: usize) -> (Grid, ScalarField, Vec<f64>, Vec<f64>, ScalarField) {
        let g = Grid::channel(n1, n2).unwrap();
        let p = |x1: f64, x2: f64| cos(x1) * cosh(x2) + sin(2.0 * x1) * x2.powi(3) + cos(PI * x2);
        let lap = |x1: f64, x2: f64| {
            sin(2.0 * x1) * (-4.0 * x2.powi(3) + 6.0 * x2) - PI * PI * cos(PI * x2)
        };
        let p2 = |x1: f64, x2: f64| {
            cos(x1) * sinh(x2) + 3.0 * sin(2.0 * x1) * x2 * x2 - PI * sin(PI * x2)
        };
        let rhs = ScalarField::from_fn(g, lap).unwrap();
        let top: Vec<f64> = (0..n1).map(|i| p2(g.x1(i), 1.0)).collect();
        let bot: Vec<f64> = (0..n1).map(|i| p2(g.x1(i), -1.0)).collect();
        let exact = ScalarField::from_fn(g, p).unwrap();
        let exact = exact.map(|v| v - exact.mean());
        (g, rhs, top, bot, exact)
    }

    #[test]
    fn neumann_manufactured_second_order() {
        let err = |n2| {
            let (_, rhs, top, bot, exact) = manufactured(16, n2);
            let rhs = rhs.map(|v| v);
            // The trapezoid compatibility defect of the continuous data is
            // O(h^2); shift the mean of rhs so the discrete problem is exact.
            let g = *rhs.grid();
            let t0: f64 = top.iter().sum::<f64>() / 16.0;
            let b0: f64 = bot.iter().sum::<f64>() / 16.0;
            let shift = (rhs.integral() / (2.0 * PI) - (t0 - b0)) / 2.0;
            let rhs = ScalarField::from_fn(g, |_, _| 0.0).unwrap().map(|_| -shift).add(&rhs);
            let p = neumann_solve(&rhs, &top, &bot).unwrap();
            p.sub(&exact).max_abs()
        };
        let (e1, e2) = (err(33), err(65));
        assert!(e1 < 2e-2, "{e1}");
        assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn neumann_rejects_incompatible_data() {
        let g = Grid::channel(8, 17).unwrap();
        let rhs = ScalarField::from_fn(g, |_, _| 1.0).unwrap();
        let zero = vec![0.0; 8];
        assert!(matches!(neumann_solve(&rhs, &zero, &zero), Err(Error::Compatibility { .. })));
        // Compatible: int 1 = 4 pi = 2 pi (top - bot) with top = 1, bot = -1.
        let top = vec![1.0; 8];
        let bot = vec![-1.0; 8];
        let p = neumann_solve(&rhs, &top, &bot).unwrap();
        let want = ScalarField::from_fn(g, |_, x2| 0.5 * x2 * x2 - 1.0 / 6.0).unwrap();
        assert!(p.sub(&want).max_abs() < 1e-2);
    }

    #[test]
    fn neumann_requires_channel() {
        let g = Grid::torus(8, 8).unwrap();
        let z = ScalarField::zeros(g);
        assert!(matches!(neumann_solve(&z, &[0.0; 8], &[0.0; 8]), Err(Error::Unsupported(_))));
    }

    fn sample_field(g: Grid) -> ChannelField {
        let c1 = ScalarField::from_fn(g, |x1, x2| sin(x1) * x2 + cos(2.0 * x1 + x2) + 0.3).unwrap();
        let c2 = ScalarField::from_fn(g, |x1, x2| cos(x1) * (1.0 + x2) + x2 * x2 * sin(3.0 * x1)).unwrap();
        ChannelField::new(c1, c2).unwrap()
    }

    #[test]
    fn leray_is_exact_projection() {
        let g = Grid::channel(16, 33).unwrap();
        let h = sample_field(g);
        let ph = leray(&h).unwrap();
        let (div, wall) = solenoidal_residual(&ph).unwrap();
        assert!(div < 1e-12 && wall < 1e-12, "{div} {wall}");
        let pph = leray(&ph).unwrap();
        assert!(pph.sub(&ph).l2_norm() < 1e-12 * ph.l2_norm());
        // Discrete gradients are annihilated.
        let phi = ScalarField::from_fn(g, |x1, x2| cos(x1) * cos(PI * (x2 + 1.0)) + sin(2.0 * x1) * x2).unwrap();
        let grad = ChannelField::new(ops::d1(&phi), ops::d2(&phi)).unwrap();
        assert!(leray(&grad).unwrap().l2_norm() < 1e-12 * grad.l2_norm());
    }

    #[test]
    fn leray_routes_agree_to_second_order() {
        let diff = |n2| {
            let g = Grid::channel(16, n2).unwrap();
            let h = sample_field(g);
            leray(&h).unwrap().sub(&leray_neumann(&h).unwrap()).l2_norm()
        };
        let (a, b) = (diff(33), diff(65));
        assert!(a < 5e-2, "{a}");
        assert!(a / b > 3.0, "ratio {}", a / b);
    }

    #[test]
    fn stream_function_recovers_field() {
        let g = Grid::channel(16, 33).unwrap();
        let psi = ScalarField::from_fn(g, |x1, x2| (1.0 - x2 * x2).powi(2) * sin(x1) + x2).unwrap();
        let h = leray(&ops::curl_of_stream(&psi)).unwrap();
        let s = stream_function(&h, 1e-8).unwrap();
        let back = ops::curl_of_stream(&s);
        // -d2 of the trapezoid antiderivative reproduces h1 to O(h^2).
        assert!(back.c2.sub(&h.c2).max_abs() < 5e-2);
        assert!(back.c1.sub(&h.c1).max_abs() < 5e-2);
        let bad = sample_field(g);
        assert!(matches!(stream_function(&bad, 1e-8), Err(Error::NotSolenoidal { .. })));
    }
}

//! The operator `L_a` governing `f = P_perp b` at linear order, with the
//! frozen profile `a(x2)`, and its linear pressure `p_L`.

use alloc::vec;
use alloc::vec::Vec;

use crate::diag::{log_slope, DiagSeries};
use crate::elliptic::{leray, neumann_gradient, neumann_solve_scaled};
use crate::error::{Error, Result};
use crate::field::{ChannelField, ScalarField};
use crate::ops;
use crate::profile::ShearProfile;

#[derive(Debug, Clone, PartialEq)]
pub struct LinOpConfig {
    pub shear: ShearProfile,
    /// `a(x2)` sampled on the `x2` nodes.
    pub a: Vec<f64>,
}

impl LinOpConfig {
    pub fn new(shear: ShearProfile, a: Vec<f64>) -> Result<Self> {
        if a.len() != shear.grid().n2() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "a has {} samples, grid has {} x2 nodes",
                a.len(),
                shear.grid().n2()
            )));
        }
        if let Some(index) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(LinOpConfig { shear, a })
    }

    /// Takes `a` from an `x1`-independent field.
    pub fn from_field(shear: ShearProfile, a: &ScalarField) -> Result<Self> {
        let prof = ops::p0_profile(a);
        let dev = ops::pperp(a).max_abs();
        if dev > 1e-12 * a.max_abs().max(1.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "a must be independent of x1 (deviation {dev:e})"
            )));
        }
        Self::new(shear, prof)
    }

    pub fn zero_a(shear: ShearProfile) -> Self {
        let n2 = shear.grid().n2();
        LinOpConfig { shear, a: vec![0.0; n2] }
    }
}

/// `p_L` with its wall data `d2 p_L = -(gamma d1 f2)` on `x2 = +-1`.
fn pressure_and_bc(f: &ChannelField, shear: &ShearProfile) -> Result<(ScalarField, Vec<f64>, Vec<f64>)> {
    let g = *f.grid();
    let (n1, n2) = (g.n1(), g.n2());
    let d1f1 = ops::d1(&f.c1).mul_profile(shear.gamma());
    let d1f2 = ops::d1(&f.c2).mul_profile(shear.gamma());
    let h = ChannelField { c1: d1f1.add(&f.c2.mul_profile(shear.dgamma())), c2: d1f2.clone() };
    let rhs = ops::divergence(&h).scale(-1.0);
    let top: Vec<f64> = (0..n1).map(|i| -d1f2.get(i, n2 - 1)).collect();
    let bot: Vec<f64> = (0..n1).map(|i| -d1f2.get(i, 0)).collect();
    let scale = crate::ops::sobolev_norm_vec(&h, 1)?;
    let p = neumann_solve_scaled(&rhs, &top, &bot, scale)?;
    Ok((p, top, bot))
}

/// Mean-zero solution of `Lap p_L = -div(gamma d1 f + f2 gamma' e1)` with
/// `d2 p_L = -(gamma d1 f + f2 gamma' e1)_2` on the walls. `f` need not be
/// solenoidal or tangent.
pub fn linear_pressure(f: &ChannelField, shear: &ShearProfile) -> Result<ScalarField> {
    if f.grid() != shear.grid() {
        return Err(Error::ShapeMismatch("f and shear live on different grids".into()));
    }
    Ok(pressure_and_bc(f, shear)?.0)
}

/// ```text
/// L_a f = gamma^2 d1^2 f + gamma d1 grad p_L - gamma' d2 p_L e1
///       + a d1 P(f2 a' e1 + a d1 f + gamma d1 f + gamma' f2 e1)
///       - (P(f2 a' e1 + a d1 f + gamma d1 f + gamma' f2 e1))_2 a' e1
///       + gamma d1 P(f2 a' e1 + a d1 f) - gamma' (P(f2 a' e1 + a d1 f))_2 e1
/// ```
/// with `a' = D2 a`. `f` must have `P0 f = 0`.
pub fn apply_la(f: &ChannelField, cfg: &LinOpConfig) -> Result<ChannelField> {
    let shear = &cfg.shear;
    if f.grid() != shear.grid() {
        return Err(Error::ShapeMismatch("f and shear live on different grids".into()));
    }
    let mean = ops::p0_vec(f).max_abs();
    if mean > 1e-9 * f.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::DomainViolation { residual: mean });
    }
    let gam = shear.gamma();
    let dgam = shear.dgamma();
    let a = &cfg.a;
    let mut da = vec![0.0; a.len()];
    ops::fd_derivative(a, f.grid().h2(), &mut da);
    let gam2: Vec<f64> = gam.iter().map(|g| g * g).collect();

    let d1f = ChannelField { c1: ops::d1(&f.c1), c2: ops::d1(&f.c2) };
    let d11f = ChannelField { c1: ops::d1(&d1f.c1), c2: ops::d1(&d1f.c2) };

    let (p, top, bot) = pressure_and_bc(f, shear)?;
    let gp = neumann_gradient(&p, &top, &bot);

    // Line 1.
    let mut out = ChannelField {
        c1: d11f.c1.mul_profile(&gam2).add(&ops::d1(&gp.c1).mul_profile(gam)),
        c2: d11f.c2.mul_profile(&gam2).add(&ops::d1(&gp.c2).mul_profile(gam)),
    };
    out.c1 = out.c1.sub(&gp.c2.mul_profile(dgam));

    // q = f2 a' e1 + a d1 f,  h = q + gamma d1 f + gamma' f2 e1
    let q = ChannelField {
        c1: f.c2.mul_profile(&da).add(&d1f.c1.mul_profile(a)),
        c2: d1f.c2.mul_profile(a),
    };
    let h = ChannelField {
        c1: q.c1.add(&d1f.c1.mul_profile(gam)).add(&f.c2.mul_profile(dgam)),
        c2: q.c2.add(&d1f.c2.mul_profile(gam)),
    };
    let ph = leray(&h)?;
    let pq = leray(&q)?;

    // Line 2 and 3.
    out.c1 = out.c1.add(&ops::d1(&ph.c1).mul_profile(a));
    out.c2 = out.c2.add(&ops::d1(&ph.c2).mul_profile(a));
    out.c1 = out.c1.sub(&ph.c2.mul_profile(&da));
    // Line 4.
    out.c1 = out.c1.add(&ops::d1(&pq.c1).mul_profile(gam));
    out.c2 = out.c2.add(&ops::d1(&pq.c2).mul_profile(gam));
    out.c1 = out.c1.sub(&pq.c2.mul_profile(dgam));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupReport {
    /// Columns `t, l2, hn, envelope, ratio`; `envelope` is
    /// `||f0||_{H^n} exp(-(5/8)(c0/c_P)^2 t)` and `ratio = hn / envelope`.
    pub series: DiagSeries,
    /// `-d ln ||f||_{L^2} / dt`, least squares over the run.
    pub l2_rate: f64,
    pub max_ratio: f64,
    /// `max_ratio <= 1 + slack`.
    pub passed: bool,
}

/// Integrates `df/dt = L_a f` with RK4 and compares `||f(t)||_{H^n}` with
/// `||f0||_{H^n} exp(-(5/8)(c0/c_P)^2 t)`, `c_P = 1`.
pub fn semigroup_decay_experiment(
    cfg: &LinOpConfig,
    f0: &ChannelField,
    t_end: f64,
    dt: f64,
    n: usize,
    slack: f64,
) -> Result<SemigroupReport> {
    if !(dt > 0.0 && t_end >= 0.0) {
        return Err(Error::InvalidParameter("need dt > 0 and t_end >= 0".into()));
    }
    let c0 = cfg.shear.c0();
    let cp = ops::poincare_constant().sharp;
    let rate = 0.625 * (c0 / cp) * (c0 / cp);
    let h0 = ops::sobolev_norm_vec(f0, n)?;
    let steps = libm::ceil(t_end / dt - 1e-9) as usize;
    let dt = if steps > 0 { t_end / steps as f64 } else { dt };
    let mut series = DiagSeries::new(&["t", "l2", "hn", "envelope", "ratio"]);
    let mut f = f0.clone();
    let mut max_ratio: f64 = 0.0;
    for s in 0..=steps {
        let t = s as f64 * dt;
        let hn = ops::sobolev_norm_vec(&f, n)?;
        let env = h0 * libm::exp(-rate * t);
        let ratio = if env > 0.0 { hn / env } else { 0.0 };
        max_ratio = max_ratio.max(ratio);
        series.push(vec![t, f.l2_norm(), hn, env, ratio])?;
        if s == steps {
            break;
        }
        let k1 = apply_la(&f, cfg)?;
        let mut g = f.clone();
        g.axpy(0.5 * dt, &k1);
        let k2 = apply_la(&g, cfg)?;
        let mut g = f.clone();
        g.axpy(0.5 * dt, &k2);
        let k3 = apply_la(&g, cfg)?;
        let mut g = f.clone();
        g.axpy(dt, &k3);
        let k4 = apply_la(&g, cfg)?;
        f.axpy(dt / 6.0, &k1);
        f.axpy(dt / 3.0, &k2);
        f.axpy(dt / 3.0, &k3);
        f.axpy(dt / 6.0, &k4);
        f.check_finite()?;
    }
    let ts = series.column("t").unwrap_or_default();
    let l2 = series.column("l2").unwrap_or_default();
    let l2_rate = log_slope(&ts, &l2).map_or(0.0, |s| -s);
    Ok(SemigroupReport { series, l2_rate, max_ratio, passed: max_ratio <= 1.0 + slack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::profile::Profile;
    use core::f64::consts::PI;
    use libm::{cos, cosh, sin, sinh};

    fn first_mode(g: Grid) -> ChannelField {
        let psi = ScalarField::from_fn(g, |x1, x2| sin(x1) * sin(PI * (x2 + 1.0)) / PI).unwrap();
        leray(&ops::curl_of_stream(&psi)).unwrap()
    }

    #[test]
    fn constant_shear_has_no_pressure() {
        let g = Grid::channel(16, 33).unwrap();
        let s = ShearProfile::new(Profile::Const(2.0), g).unwrap();
        assert!(linear_pressure(&first_mode(g), &s).unwrap().max_abs() < 1e-12);
    }

    /// f2 = sin x1 sin(pi(x2+1)), f1 = pi cos x1 cos(pi(x2+1)), gamma = 1 + x2/2:
    /// rhs = -2 gamma' d1 f2 = -cos x1 sin(pi(x2+1)), zero Neumann data, and
    /// p = cos x1 [sin(pi(x2+1))/(1+pi^2) - pi sinh(x2)/((1+pi^2) cosh 1)].
    #[test]
    fn linear_pressure_matches_closed_form() {
        let err = |n2| {
            let g = Grid::channel(16, n2).unwrap();
            let s = ShearProfile::new(Profile::Linear { c0: 0.5, slope: 0.5 }, g).unwrap();
            let c1 = ScalarField::from_fn(g, |x1, x2| PI * cos(x1) * cos(PI * (x2 + 1.0))).unwrap();
            let c2 = ScalarField::from_fn(g, |x1, x2| sin(x1) * sin(PI * (x2 + 1.0))).unwrap();
            let f = ChannelField::new(c1, c2).unwrap();
            let p = linear_pressure(&f, &s).unwrap();
            let k = 1.0 + PI * PI;
            let want = ScalarField::from_fn(g, |x1, x2| {
                cos(x1) * (sin(PI * (x2 + 1.0)) / k - PI * sinh(x2) / (k * cosh(1.0)))
            })
            .unwrap();
            p.sub(&want).max_abs()
        };
        let (a, b) = (err(33), err(65));
        assert!(a < 5e-3, "{a}");
        assert!(a / b > 3.5, "ratio {}", a / b);
    }

    #[test]
    fn pressure_bound_by_gamma_prime() {
        let g = Grid::channel(16, 65).unwrap();
        let s = ShearProfile::new(Profile::Linear { c0: 1.0, slope: 0.3 }, g).unwrap();
        let f = first_mode(g);
        let p = linear_pressure(&f, &s).unwrap();
        let grad = ChannelField { c1: ops::d1(&p), c2: ops::d2(&p) };
        assert!(grad.l2_norm() <= 2.0 * 0.3 * f.c2.l2_norm());
    }

    #[test]
    fn pure_heat_for_constant_shear() {
        let g = Grid::channel(16, 33).unwrap();
        let s = ShearProfile::new(Profile::Const(1.5), g).unwrap();
        let cfg = LinOpConfig::zero_a(s);
        let f = first_mode(g);
        let lf = apply_la(&f, &cfg).unwrap();
        assert!(lf.sub(&f.scale(-2.25)).max_abs() < 1e-12);
    }

    #[test]
    fn la_preserves_structure() {
        let g = Grid::channel(16, 65).unwrap();
        let s = ShearProfile::new(Profile::Linear { c0: 1.0, slope: 0.1 }, g).unwrap();
        let a: Vec<f64> = (0..g.n2()).map(|j| 0.01 * cos(PI * g.x2(j) / 2.0)).collect();
        let cfg = LinOpConfig::new(s, a).unwrap();
        let f = first_mode(g).add(&first_mode(g).scale(0.5));
        let lf = apply_la(&f, &cfg).unwrap();
        assert!(ops::p0_vec(&lf).max_abs() < 1e-12 * lf.max_abs());
        // Tangent input: the wall value of the second component vanishes.
        assert!(lf.wall_normal() < 1e-10 * lf.max_abs());
        let div = ops::divergence(&lf).l2_norm() / ops::sobolev_norm_vec(&lf, 1).unwrap();
        assert!(div < 1e-2, "{div}");
        let mean = ChannelField::new(
            ScalarField::from_fn(g, |_, x2| x2).unwrap(),
            ScalarField::zeros(g),
        )
        .unwrap();
        assert!(matches!(apply_la(&mean, &cfg), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn semigroup_rate_for_first_mode() {
        let g = Grid::channel(16, 33).unwrap();
        let s = ShearProfile::new(Profile::Const(1.0), g).unwrap();
        let cfg = LinOpConfig::zero_a(s);
        let rep = semigroup_decay_experiment(&cfg, &first_mode(g), 2.0, 0.01, 1, 0.0).unwrap();
        assert!((rep.l2_rate - 1.0).abs() < 1e-6, "{}", rep.l2_rate);
        assert!(rep.passed);
        let zero = semigroup_decay_experiment(&cfg, &ChannelField::zeros(g), 1.0, 0.1, 1, 0.0).unwrap();
        assert!(zero.series.column("l2").unwrap().iter().all(|&v| v == 0.0));
    }
}

//! Magnetic lines `dX/ds = B(X)`: adaptive integration, periodic-orbit
//! detection, orbit averages and the per-orbit heat equation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::diag::DiagSeries;
use crate::error::{Error, Result};
use crate::fft::{derivative_wavenumber, Fft};
use crate::field::ScalarField;
use crate::grid::{Domain, Grid};
use crate::scalar::AdvectingField;

const TAU: f64 = 2.0 * PI;

/// Largest distance between a refined section crossing and the base point
/// for the crossing to count as a return.
const RETURN_RADIUS: f64 = 1e-4;

fn wrap(d: f64) -> f64 {
    d - TAU * libm::round(d / TAU)
}

/// Integrator for the magnetic lines of a steady field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowMap {
    pub field: AdvectingField,
    pub atol: f64,
    pub rtol: f64,
    /// Points with `|B| <= b_min` are critical.
    pub b_min: f64,
    /// Longest integration time before giving up on a return.
    pub s_max: f64,
    /// Bisection tolerance on the signed distance to the section.
    pub tol_ret: f64,
    /// Samples stored per orbit, uniform in `s`.
    pub n_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Periodic,
    Critical,
    Unresolved,
    /// Outside the region handed to [`build_gbar`].
    Excluded,
}

impl PointClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointClass::Periodic => "periodic",
            PointClass::Critical => "critical",
            PointClass::Unresolved => "unresolved",
            PointClass::Excluded => "excluded",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub base: [f64; 2],
    pub period: f64,
    /// `X(base, j period / n)` in unwrapped coordinates.
    pub samples: Vec<[f64; 2]>,
    /// Lattice translation `(X(base, period) - base) / 2 pi` on periodic axes.
    pub shift: [i64; 2],
    pub psi: f64,
    /// `max_j |psi(samples[j]) - psi(base)|`.
    pub psi_drift: f64,
    /// Distance between the return point and the base, modulo the lattice.
    pub return_error: f64,
}

impl Orbit {
    pub fn s(&self, j: usize) -> f64 {
        self.period * j as f64 / self.samples.len() as f64
    }
}

// Dormand-Prince 5(4) tableau (autonomous, so the nodes are not needed).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl FlowMap {
    /// Defaults: `atol = rtol = 1e-12`, `s_max = 1e3`, `tol_ret = 1e-9`,
    /// 256 samples per orbit and `b_min = 1e-8 max|B|` over the grid nodes.
    pub fn for_grid(field: AdvectingField, grid: &Grid) -> Result<Self> {
        field.check_grid(grid)?;
        Ok(FlowMap {
            field,
            atol: 1e-12,
            rtol: 1e-12,
            b_min: 1e-8 * field.max_speed(grid),
            s_max: 1e3,
            tol_ret: 1e-9,
            n_samples: 256,
        })
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n.max(2);
        self
    }

    fn wrap_delta(&self, d: [f64; 2]) -> [f64; 2] {
        let p = self.field.periodic();
        [if p[0] { wrap(d[0]) } else { d[0] }, if p[1] { wrap(d[1]) } else { d[1] }]
    }

    fn rhs(&self, y: [f64; 2], dir: f64) -> [f64; 2] {
        let v = self.field.velocity(y);
        [dir * v[0], dir * v[1]]
    }

    /// One Dormand-Prince step; returns the 5th-order solution and the
    /// embedded error estimate.
    fn dopri(&self, y: [f64; 2], h: f64, dir: f64) -> ([f64; 2], [f64; 2]) {
        let mut k = [[0.0; 2]; 7];
        for st in 0..7 {
            let mut yy = y;
            for (j, kj) in k.iter().enumerate().take(st) {
                yy[0] += h * A[st][j] * kj[0];
                yy[1] += h * A[st][j] * kj[1];
            }
            k[st] = self.rhs(yy, dir);
        }
        let mut y5 = y;
        let mut err = [0.0; 2];
        for st in 0..7 {
            for d in 0..2 {
                y5[d] += h * B5[st] * k[st][d];
                err[d] += h * (B5[st] - B4[st]) * k[st][d];
            }
        }
        (y5, err)
    }

    fn err_norm(&self, y: [f64; 2], y5: [f64; 2], err: [f64; 2]) -> f64 {
        let mut m: f64 = 0.0;
        for d in 0..2 {
            let sc = self.atol + self.rtol * y[d].abs().max(y5[d].abs());
            m = m.max(err[d].abs() / sc);
        }
        m
    }

    fn initial_step(&self, y: [f64; 2]) -> f64 {
        let v = self.field.speed(y);
        if v > 0.0 {
            (1e-3 / v).min(0.1)
        } else {
            0.1
        }
    }

    /// Adaptive attempt of a step of at most `h`; returns the accepted step,
    /// the new state and the suggested next step.
    fn adaptive_step(&self, y: [f64; 2], h: f64, s: f64, dir: f64) -> Result<(f64, [f64; 2], f64)> {
        let mut h = h;
        loop {
            if !(h > 1e-14 * s.abs().max(1.0)) {
                return Err(Error::StepFailure { s });
            }
            let (y5, err) = self.dopri(y, h, dir);
            let e = self.err_norm(y, y5, err);
            if !e.is_finite() {
                h *= 0.2;
                continue;
            }
            let fac = if e == 0.0 { 5.0 } else { (0.9 * libm::pow(e, -0.2)).clamp(0.2, 5.0) };
            if e <= 1.0 {
                return Ok((h, y5, h * fac));
            }
            h *= fac.min(0.9);
        }
    }

    /// `X(x, s)`; negative `s` integrates backwards. Periodic coordinates are
    /// not wrapped.
    pub fn integrate_flow(&self, x: [f64; 2], s: f64) -> Result<[f64; 2]> {
        let dir = if s < 0.0 { -1.0 } else { 1.0 };
        let total = s.abs();
        let mut y = x;
        let mut done = 0.0;
        let mut h = self.initial_step(x);
        while done < total {
            let remaining = total - done;
            let last = h >= remaining;
            let (taken, yn, next) = self.adaptive_step(y, h.min(remaining), done, dir)?;
            y = yn;
            done = if last && taken >= remaining { total } else { done + taken };
            h = next;
        }
        Ok(y)
    }

    /// First return to the section through `x` normal to `B(x)`, crossed from
    /// the negative to the positive side within [`RETURN_RADIUS`] of `x`.
    pub fn detect_period(&self, x: [f64; 2]) -> Result<Orbit> {
        let b = self.field.velocity(x);
        let speed = libm::sqrt(b[0] * b[0] + b[1] * b[1]);
        if speed <= self.b_min {
            return Err(Error::CriticalPoint { speed });
        }
        let n = [b[0] / speed, b[1] / speed];
        let sigma = |y: [f64; 2]| {
            let d = self.wrap_delta([y[0] - x[0], y[1] - x[1]]);
            n[0] * d[0] + n[1] * d[1]
        };
        let mut y = x;
        let mut s = 0.0;
        let mut h = self.initial_step(x);
        let mut sig = 0.0;
        let period = loop {
            if s > self.s_max {
                return Err(Error::NoReturn { s_max: self.s_max });
            }
            // Short steps keep the wrapped section distance continuous.
            let cap = 0.25 / self.field.speed(y).max(self.b_min);
            let (taken, yn, next) = self.adaptive_step(y, h.min(cap), s, 1.0)?;
            let sn = sigma(yn);
            if sig < 0.0 && sn >= 0.0 {
                // Bisection on the step length from `y`.
                let (mut lo, mut hi) = (0.0, taken);
                let mut ym = yn;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    ym = self.dopri(y, mid, 1.0).0;
                    let sm = sigma(ym);
                    if sm.abs() <= 1e-3 * self.tol_ret || hi - lo <= 1e-16 * (s + taken) {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if sm < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let tau = 0.5 * (lo + hi);
                let d = self.wrap_delta([ym[0] - x[0], ym[1] - x[1]]);
                if libm::sqrt(d[0] * d[0] + d[1] * d[1]) < RETURN_RADIUS && sigma(ym).abs() <= self.tol_ret {
                    break s + tau;
                }
            }
            y = yn;
            s += taken;
            sig = sn;
            h = next;
        };
        self.build_orbit(x, period)
    }

    fn build_orbit(&self, x: [f64; 2], period: f64) -> Result<Orbit> {
        let m = self.n_samples;
        let ds = period / m as f64;
        let psi = self.field.stream(x);
        let mut samples = Vec::with_capacity(m);
        let mut y = x;
        let mut psi_drift: f64 = 0.0;
        for _ in 0..m {
            samples.push(y);
            psi_drift = psi_drift.max((self.field.stream(y) - psi).abs());
            y = self.integrate_flow(y, ds)?;
        }
        psi_drift = psi_drift.max((self.field.stream(y) - psi).abs());
        let raw = [y[0] - x[0], y[1] - x[1]];
        let d = self.wrap_delta(raw);
        let shift = [libm::round((raw[0] - d[0]) / TAU) as i64, libm::round((raw[1] - d[1]) / TAU) as i64];
        Ok(Orbit {
            base: x,
            period,
            samples,
            shift,
            psi,
            psi_drift,
            return_error: libm::sqrt(d[0] * d[0] + d[1] * d[1]),
        })
    }

    pub fn classify(&self, x: [f64; 2]) -> (PointClass, Option<Orbit>) {
        match self.detect_period(x) {
            Ok(o) => (PointClass::Periodic, Some(o)),
            Err(Error::CriticalPoint { .. }) => (PointClass::Critical, None),
            Err(_) => (PointClass::Unresolved, None),
        }
    }
}

/// Point evaluation of a scalar.
pub trait Sampler {
    fn sample(&self, x: [f64; 2]) -> f64;
}

impl<F: Fn([f64; 2]) -> f64> Sampler for F {
    fn sample(&self, x: [f64; 2]) -> f64 {
        self(x)
    }
}

/// Bilinear interpolation of grid values. Periodic axes wrap; bounded axes
/// clamp to the outermost nodes. Disk points are given in Cartesian form.
pub struct Bilinear<'a> {
    f: &'a ScalarField,
}

impl<'a> Bilinear<'a> {
    pub fn new(f: &'a ScalarField) -> Self {
        Bilinear { f }
    }
}

impl Sampler for Bilinear<'_> {
    fn sample(&self, x: [f64; 2]) -> f64 {
        let g = self.f.grid();
        let (n1, n2) = (g.n1(), g.n2());
        let (u, v) = match g.domain() {
            Domain::Disk => {
                let th = libm::atan2(x[1], x[0]);
                let r = libm::sqrt(x[0] * x[0] + x[1] * x[1]);
                (th, r)
            }
            _ => (x[0], x[1]),
        };
        let a = u.rem_euclid(TAU) / g.h1();
        let i0 = libm::floor(a) as usize % n1;
        let fa = a - libm::floor(a);
        let i1 = (i0 + 1) % n1;
        let (j0, j1, fb) = match g.domain() {
            Domain::Torus => {
                let b = v.rem_euclid(TAU) / g.h2();
                let j = libm::floor(b) as usize % n2;
                (j, (j + 1) % n2, b - libm::floor(b))
            }
            _ => {
                let lo = g.x2(0);
                let b = ((v - lo) / g.h2()).clamp(0.0, (n2 - 1) as f64);
                let j = (libm::floor(b) as usize).min(n2 - 2);
                (j, j + 1, b - j as f64)
            }
        };
        let f = |i, j| self.f.get(i, j);
        (1.0 - fa) * ((1.0 - fb) * f(i0, j0) + fb * f(i0, j1)) + fa * ((1.0 - fb) * f(i1, j0) + fb * f(i1, j1))
    }
}

/// Trigonometric interpolant of a torus field with the Nyquist modes
/// dropped.
pub struct TrigInterp {
    n1: usize,
    n2: usize,
    coeffs: Vec<Complex64>,
}

impl TrigInterp {
    pub fn new(f: &ScalarField) -> Result<Self> {
        let g = f.grid();
        if g.domain() != Domain::Torus {
            return Err(Error::Unsupported("trigonometric interpolation needs the torus"));
        }
        let (n1, n2) = (g.n1(), g.n2());
        let mut c: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let f1 = Fft::new(n1);
        let f2 = Fft::new(n2);
        for i in 0..n1 {
            f2.forward(&mut c[i * n2..(i + 1) * n2]);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n1];
        for j in 0..n2 {
            for i in 0..n1 {
                col[i] = c[i * n2 + j];
            }
            f1.forward(&mut col);
            for i in 0..n1 {
                c[i * n2 + j] = col[i];
            }
        }
        let norm = 1.0 / (n1 * n2) as f64;
        for (k, v) in c.iter_mut().enumerate() {
            let (k1, k2) = (k / n2, k % n2);
            *v = if k1 == n1 / 2 || k2 == n2 / 2 { Complex64::new(0.0, 0.0) } else { *v * norm };
        }
        Ok(TrigInterp { n1, n2, coeffs: c })
    }
}

impl Sampler for TrigInterp {
    fn sample(&self, x: [f64; 2]) -> f64 {
        let e = |n: usize, t: f64| -> Vec<Complex64> {
            (0..n).map(|k| Complex64::from_polar(1.0, derivative_wavenumber(k, n) * t)).collect()
        };
        let e1 = e(self.n1, x[0]);
        let e2 = e(self.n2, x[1]);
        let mut acc = 0.0;
        for (k1, a) in e1.iter().enumerate() {
            let row = &self.coeffs[k1 * self.n2..(k1 + 1) * self.n2];
            let mut s = Complex64::new(0.0, 0.0);
            for (c, b) in row.iter().zip(&e2) {
                s += c * b;
            }
            acc += (a * s).re;
        }
        acc
    }
}

/// `(1/l) int_0^l g(X(x,s)) ds` by the periodic trapezoid rule on the
/// stored samples.
pub fn orbit_average(g: &dyn Sampler, orbit: &Orbit) -> f64 {
    orbit.samples.iter().map(|&p| g.sample(p)).sum::<f64>() / orbit.samples.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitAverage {
    pub gbar: ScalarField,
    pub class: Vec<PointClass>,
    /// Period per node, `NaN` unless periodic.
    pub period: Vec<f64>,
}

impl OrbitAverage {
    pub fn max_period(&self) -> Option<f64> {
        self.period.iter().copied().filter(|p| p.is_finite()).reduce(f64::max)
    }

    pub fn periodic_mask(&self) -> Vec<bool> {
        self.class.iter().map(|c| *c == PointClass::Periodic).collect()
    }
}

/// Orbit average at every node where `region` holds. Critical, unresolved
/// and excluded nodes keep `g0`.
pub fn build_gbar(
    g0: &ScalarField,
    flow: &FlowMap,
    sampler: &dyn Sampler,
    region: impl Fn([f64; 2]) -> bool,
) -> OrbitAverage {
    let grid = *g0.grid();
    let mut gbar = g0.clone();
    let mut class = vec![PointClass::Excluded; grid.len()];
    let mut period = vec![f64::NAN; grid.len()];
    for i1 in 0..grid.n1() {
        for i2 in 0..grid.n2() {
            let x = grid.point(i1, i2);
            let k = grid.idx(i1, i2);
            if !region(x) {
                continue;
            }
            let (c, orbit) = flow.classify(x);
            class[k] = c;
            if let Some(o) = orbit {
                gbar.values_mut()[k] = orbit_average(sampler, &o);
                period[k] = o.period;
            }
        }
    }
    OrbitAverage { gbar, class, period }
}

/// `sqrt(sum_{mask} w f^2)`.
pub fn masked_l2(f: &ScalarField, mask: &[bool]) -> f64 {
    let g = f.grid();
    let mut acc = 0.0;
    for i1 in 0..g.n1() {
        for i2 in 0..g.n2() {
            let k = g.idx(i1, i2);
            if mask[k] {
                acc += g.weight(i2) * f.values()[k] * f.values()[k];
            }
        }
    }
    libm::sqrt(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MbReport {
    pub max_orbit_mean: f64,
    pub orbits_used: usize,
    pub eps_reg: [f64; 3],
    /// `int g^2 / (|B| + eps)` for each `eps`.
    pub integrals: [f64; 3],
    /// Integral at the smallest `eps` over the integral at the largest.
    pub growth: f64,
    pub finite: bool,
    pub in_mb: bool,
}

/// Zero orbit means over the orbits through `probes` and the integrability
/// of `g^2 / |B|` judged from three regularizations: growth above `10x`
/// between the largest and smallest `eps` counts as divergence.
pub fn mb_membership(
    g: &ScalarField,
    sampler: &dyn Sampler,
    flow: &FlowMap,
    probes: &[[f64; 2]],
    eps_reg: [f64; 3],
    mean_tol: f64,
) -> MbReport {
    let mut max_mean: f64 = 0.0;
    let mut used = 0;
    for &p in probes {
        if let Ok(o) = flow.detect_period(p) {
            max_mean = max_mean.max(orbit_average(sampler, &o).abs());
            used += 1;
        }
    }
    let grid = g.grid();
    let mut integrals = [0.0; 3];
    for (e, out) in eps_reg.iter().zip(integrals.iter_mut()) {
        let mut acc = 0.0;
        for i1 in 0..grid.n1() {
            for i2 in 0..grid.n2() {
                let v = g.get(i1, i2);
                acc += grid.weight(i2) * v * v / (flow.field.speed(grid.point(i1, i2)) + e);
            }
        }
        *out = acc;
    }
    let growth = if integrals[0] > 0.0 { integrals[2] / integrals[0] } else { 1.0 };
    let finite = growth <= 10.0;
    MbReport {
        max_orbit_mean: max_mean,
        orbits_used: used,
        eps_reg,
        integrals,
        growth,
        finite,
        in_mb: used > 0 && max_mean <= mean_tol && finite,
    }
}

/// Solution at time `t` of `dG/dt = d_s^2 G` on the circle of length
/// `orbit.period`, started from `g0` along the orbit samples.
pub fn heat_on_orbit_oracle(g0: &dyn Sampler, orbit: &Orbit, t: f64) -> Vec<f64> {
    let m = orbit.samples.len();
    let fft = Fft::new(m);
    let mut c: Vec<Complex64> = orbit.samples.iter().map(|&p| Complex64::new(g0.sample(p), 0.0)).collect();
    fft.forward(&mut c);
    for (k, v) in c.iter_mut().enumerate() {
        let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
        let w = TAU * kk / orbit.period;
        *v *= libm::exp(-w * w * t) / m as f64;
    }
    fft.inverse(&mut c);
    c.iter().map(|v| v.re).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    /// Columns `t, max_drift`.
    pub series: DiagSeries,
    pub per_orbit: Vec<f64>,
    pub max_drift: f64,
}

/// Drift of each orbit mean over the snapshots, relative to the first.
pub fn orbit_mean_conservation(orbits: &[Orbit], snapshots: &[(f64, &dyn Sampler)]) -> Result<ConservationReport> {
    let mut series = DiagSeries::new(&["t", "max_drift"]);
    let Some((_, first)) = snapshots.first() else {
        return Ok(ConservationReport { series, per_orbit: vec![0.0; orbits.len()], max_drift: 0.0 });
    };
    let m0: Vec<f64> = orbits.iter().map(|o| orbit_average(*first, o)).collect();
    let mut per_orbit = vec![0.0f64; orbits.len()];
    for (t, s) in snapshots {
        let mut worst: f64 = 0.0;
        for (k, o) in orbits.iter().enumerate() {
            let d = (orbit_average(*s, o) - m0[k]).abs();
            per_orbit[k] = per_orbit[k].max(d);
            worst = worst.max(d);
        }
        series.push(vec![*t, worst])?;
    }
    let max_drift = per_orbit.iter().copied().fold(0.0, f64::max);
    Ok(ConservationReport { series, per_orbit, max_drift })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecayReport {
    /// Columns `t, dist, env_eig, env_1d, env_conclude, ratio`: the measured
    /// distance, `d0 exp(-(2 pi/l)^2 t)`, `d0 exp(-(2 pi/l) t)`,
    /// `d0 exp(-(4 pi/l) t)` and `dist / env_eig`.
    pub series: DiagSeries,
    pub l_max: f64,
    pub max_ratio: f64,
    pub passed: bool,
}

/// Compares a measured `||g(t) - gbar0||` history with the bounded-period
/// envelope `exp(-(2 pi / l_max)^2 t)`; the two other rate expressions are
/// recorded alongside.
pub fn p0_class_decay_check(dist: &[(f64, f64)], l_max: f64, slack: f64) -> Result<ClassDecayReport> {
    if !(l_max > 0.0 && l_max.is_finite()) {
        return Err(Error::InvalidParameter("l_max must be positive and finite".into()));
    }
    let mut series = DiagSeries::new(&["t", "dist", "env_eig", "env_1d", "env_conclude", "ratio"]);
    let d0 = dist.first().map_or(0.0, |p| p.1);
    let w = TAU / l_max;
    let mut max_ratio: f64 = 0.0;
    for &(t, d) in dist {
        let eig = d0 * libm::exp(-w * w * t);
        let ratio = if eig > 0.0 { d / eig } else { 0.0 };
        max_ratio = max_ratio.max(ratio);
        series.push(vec![t, d, eig, d0 * libm::exp(-w * t), d0 * libm::exp(-2.0 * w * t), ratio])?;
    }
    Ok(ClassDecayReport { series, l_max, max_ratio, passed: max_ratio <= 1.0 + slack })
}

/// One line of the orbit dump: base point, period, shift, `psi`, class.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    pub base: [f64; 2],
    pub period: f64,
    pub shift: [i64; 2],
    pub psi: f64,
    pub class: PointClass,
}

pub const ORBIT_COLUMNS: [&str; 7] = ["x0_1", "x0_2", "period", "shift_k1", "shift_k2", "psi_value", "status"];

pub fn orbit_record(flow: &FlowMap, x: [f64; 2]) -> OrbitRecord {
    let (class, orbit) = flow.classify(x);
    OrbitRecord {
        base: x,
        period: orbit.as_ref().map_or(f64::NAN, |o| o.period),
        shift: orbit.as_ref().map_or([0, 0], |o| o.shift),
        psi: flow.field.stream(x),
        class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;
    use libm::{cos, sin};

    fn disk_flow() -> FlowMap {
        FlowMap::for_grid(AdvectingField::Rotation, &Grid::disk(16, 8).unwrap()).unwrap()
    }

    #[test]
    fn rotation_flow_map_is_exact() {
        let f = disk_flow();
        let (r, th) = (0.7, 0.3);
        let y = f.integrate_flow([r * cos(th), r * sin(th)], 2.5).unwrap();
        assert!((y[0] - r * cos(th + 2.5)).abs() < 1e-10);
        assert!((y[1] - r * sin(th + 2.5)).abs() < 1e-10);
        let back = f.integrate_flow(y, -2.5).unwrap();
        assert!((back[0] - r * cos(th)).abs() < 1e-10);
    }

    #[test]
    fn rotation_period_is_two_pi() {
        let f = disk_flow();
        for &r in &[0.05, 0.5, 0.95] {
            let o = f.detect_period([r, 0.0]).unwrap();
            assert!((o.period - TAU).abs() < 1e-8, "{}", o.period);
            assert_eq!(o.shift, [0, 0]);
        }
        let f0 = FlowMap { b_min: 1e-8, ..f };
        assert!(matches!(f0.detect_period([0.0, 0.0]), Err(Error::CriticalPoint { .. })));
    }

    #[test]
    fn shear_period_and_shift() {
        let g = Grid::channel_on(16, 17, 0.0, 1.0).unwrap();
        let f = FlowMap::for_grid(AdvectingField::Shear(Profile::Linear { c0: 0.5, slope: 1.0 }), &g).unwrap();
        // Linear is c0 + slope (x + 1): V(0.25) = 1.75.
        let o = f.detect_period([1.0, 0.25]).unwrap();
        assert!((o.period - TAU / 1.75).abs() < 1e-8, "{}", o.period);
        assert_eq!(o.shift, [1, 0]);
        let y = f.integrate_flow([1.0, 0.25], 0.4).unwrap();
        assert!((y[0] - 1.7).abs() < 1e-10 && (y[1] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn cellular_orbits_conserve_psi() {
        let g = Grid::torus(16, 16).unwrap();
        let f = FlowMap::for_grid(AdvectingField::SinSin, &g).unwrap();
        let o = f.detect_period([PI / 2.0, 0.5]).unwrap();
        assert!(o.psi_drift < 1e-8);
        assert_eq!(o.shift, [0, 0]);
        // Any sample point returns the same period.
        let o2 = f.detect_period(o.samples[77]).unwrap();
        assert!((o2.period - o.period).abs() < 1e-7);
        // Periods grow towards the separatrix.
        let near = f.detect_period([PI / 2.0, 0.01]).unwrap();
        assert!(near.period > o.period);
    }

    #[test]
    fn averages() {
        let f = disk_flow();
        let o = f.detect_period([0.6, 0.0]).unwrap();
        assert!((orbit_average(&|_: [f64; 2]| 3.0, &o) - 3.0).abs() < 1e-14);
        assert!(orbit_average(&|p: [f64; 2]| p[0] * p[0] - p[1] * p[1] + p[0], &o).abs() < 1e-9);
        // B . grad h with h = x^3 y.
        let bgh = |p: [f64; 2]| -p[1] * 3.0 * p[0] * p[0] * p[1] + p[0] * p[0] * p[0] * p[0];
        assert!(orbit_average(&bgh, &o).abs() < 1e-6);
    }

    #[test]
    fn gbar_on_disk_is_idempotent() {
        let grid = Grid::disk(16, 6).unwrap();
        let flow = FlowMap::for_grid(AdvectingField::Rotation, &grid).unwrap().with_samples(64);
        let g0 = ScalarField::from_fn(grid, |th, r| r * r * cos(th) + r).unwrap();
        let avg = build_gbar(&g0, &flow, &Bilinear::new(&g0), |_| true);
        assert!(avg.class.iter().all(|c| *c == PointClass::Periodic));
        let want = ScalarField::from_fn(grid, |_, r| r).unwrap();
        assert!(avg.gbar.sub(&want).max_abs() < 1e-9);
        let again = build_gbar(&avg.gbar, &flow, &Bilinear::new(&avg.gbar), |_| true);
        assert!(again.gbar.sub(&avg.gbar).max_abs() < 1e-9);
    }

    #[test]
    fn trig_interp_reproduces_band_limited() {
        let g = Grid::torus(16, 16).unwrap();
        let f = |x: f64, y: f64| 1.0 + sin(x) * cos(2.0 * y) + 0.3 * cos(3.0 * x - y);
        let s = TrigInterp::new(&ScalarField::from_fn(g, f).unwrap()).unwrap();
        for &(x, y) in &[(0.1, 0.2), (4.0, 5.5), (-1.0, 7.0)] {
            assert!((s.sample([x, y]) - f(x, y)).abs() < 1e-13);
        }
    }

    #[test]
    fn heat_oracle_single_mode() {
        let f = disk_flow().with_samples(32);
        let o = f.detect_period([0.5, 0.0]).unwrap();
        let g = |p: [f64; 2]| 2.0 + libm::atan2(p[1], p[0]).cos();
        let out = heat_on_orbit_oracle(&g, &o, 0.7);
        for (j, v) in out.iter().enumerate() {
            let want = 2.0 + (-0.7f64).exp() * cos(o.s(j));
            assert!((v - want).abs() < 1e-8);
        }
    }

    #[test]
    fn class_decay_envelopes() {
        let d: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 0.1, (-(i as f64) * 0.1).exp())).collect();
        let r = p0_class_decay_check(&d, TAU, 0.01).unwrap();
        assert!(r.passed && (r.max_ratio - 1.0).abs() < 1e-12);
        let r = p0_class_decay_check(&d, TAU / 2.0, 0.01).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn mb_membership_verdicts() {
        let grid = Grid::disk(32, 16).unwrap();
        let flow = FlowMap::for_grid(AdvectingField::Rotation, &grid).unwrap().with_samples(64);
        let probes: Vec<[f64; 2]> = (1..6).map(|i| [0.15 * i as f64, 0.1]).collect();
        let eps = [1e-2, 1e-3, 1e-4];
        let cos_th = ScalarField::from_fn(grid, |th, _| cos(th)).unwrap();
        let r = mb_membership(&cos_th, &|p: [f64; 2]| libm::atan2(p[1], p[0]).cos(), &flow, &probes, eps, 1e-6);
        assert!(r.in_mb, "{r:?}");
        let one = ScalarField::from_fn(grid, |_, _| 1.0).unwrap();
        let r = mb_membership(&one, &|_: [f64; 2]| 1.0, &flow, &probes, eps, 1e-6);
        assert!(!r.in_mb && (r.max_orbit_mean - 1.0).abs() < 1e-12);
    }
}

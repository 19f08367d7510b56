//! Long runs of the channel solver and the diagnostics recorded along them.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{
    background_energy, cfl_limit, energy_excess, step, velocity, MreState, StepConfig,
};
use crate::diag::DiagSeries;
use crate::elliptic::leray;
use crate::error::{Error, Result};
use crate::field::{ChannelField, ScalarField};
use crate::grid::Grid;
use crate::ops::{self, sobolev_norm, sobolev_norm_vec, MAX_SOBOLEV_ORDER};
use crate::profile::ShearProfile;
use crate::rng::{normal, Rng};

pub const MRE_COLUMNS: [&str; 11] = [
    "t",
    "l2_B",
    "l2_u",
    "hk_fperp",
    "hk2_a",
    "hm_b",
    "energy_defect",
    "ratio_fperp",
    "ratio_a",
    "ratio_m",
    "ratio_u",
];

/// `b0 = eps * curl(psi) / ||curl(psi)||_{H^m}` with
/// `psi = sum c_{k,j} trig(k x1) sin(j pi (x2 + 1) / 2)`, `k in {0, 1, 2}`,
/// `j in {1, 2}`, normal coefficients. `psi` vanishes on the walls, so `b0`
/// is tangent and `P0 b0_2 = 0`.
pub fn initial_perturbation(grid: Grid, rng: &mut Rng, eps: f64, m: usize) -> Result<ChannelField> {
    let mut terms = Vec::new();
    for k in 0..=2usize {
        for j in 1..=2usize {
            terms.push((k, j, normal(rng), normal(rng)));
        }
    }
    let psi = ScalarField::from_fn(grid, |x1, x2| {
        terms
            .iter()
            .map(|&(k, j, a, b)| {
                let kx = k as f64 * x1;
                (a * libm::cos(kx) + b * libm::sin(kx)) * libm::sin(j as f64 * PI * (x2 + 1.0) / 2.0)
            })
            .sum()
    })?;
    let b = leray(&ops::curl_of_stream(&psi))?;
    let norm = sobolev_norm_vec(&b, m.min(MAX_SOBOLEV_ORDER))?;
    if norm == 0.0 {
        return Ok(b);
    }
    Ok(b.scale(eps / norm))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MreRunConfig {
    pub t_end: f64,
    pub sample_every: f64,
    /// Fixed step; `None` picks the CFL limit at the start of every sample
    /// interval.
    pub dt: Option<f64>,
    /// Order `k` of the decaying norm. Norm orders above
    /// [`MAX_SOBOLEV_ORDER`] are capped.
    pub k: usize,
    /// Order `m` of the slowly growing norm, capped likewise.
    pub m: usize,
    /// Constant of the velocity bound `C (1 + ||gamma||_{W^{k+2,inf}})`.
    pub c_mk: f64,
    pub step: StepConfig,
    pub keep_snapshots: bool,
}

impl Default for MreRunConfig {
    fn default() -> Self {
        MreRunConfig {
            t_end: 30.0,
            sample_every: 0.25,
            dt: None,
            k: 3,
            m: 4,
            c_mk: 2.0,
            step: StepConfig::default(),
            keep_snapshots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MreRun {
    /// Columns [`MRE_COLUMNS`].
    pub series: DiagSeries,
    /// `||b0||_{H^m}`.
    pub eps: f64,
    pub c0: f64,
    pub c_p: f64,
    /// `||B0||^2`.
    pub l2_b0_sq: f64,
    /// States at the sample times, if requested.
    pub snapshots: Vec<MreState>,
    pub final_state: MreState,
    /// Largest pre-projection divergence drift over all steps.
    pub max_drift: f64,
    pub steps: usize,
}

struct Sampler<'a> {
    shear: &'a ShearProfile,
    cfg: &'a MreRunConfig,
    eps: f64,
    rate: f64,
    c_u: f64,
    e_bg: f64,
}

impl Sampler<'_> {
    fn row(&self, st: &MreState, energy_defect: f64) -> Result<Vec<f64>> {
        let k = self.cfg.k.min(MAX_SOBOLEV_ORDER);
        let k2 = (self.cfg.k + 2).min(MAX_SOBOLEV_ORDER);
        let k1 = (self.cfg.k + 1).min(MAX_SOBOLEV_ORDER);
        let m = self.cfg.m.min(MAX_SOBOLEV_ORDER);
        let u = velocity(&st.b, self.shear)?;
        let f = st.f();
        let a = ops::p0(&st.b.c1);
        let hk_f = sobolev_norm_vec(&f, k)?;
        let hk2_a = sobolev_norm(&a, k2)?;
        let hm_b = sobolev_norm_vec(&st.b, m)?;
        let hk1_u = sobolev_norm_vec(&u, k1)?;
        let e = 2.0 * (self.e_bg + energy_excess(&st.b, self.shear));
        let t = st.t;
        let div = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
        let three = 3.0 * self.eps;
        Ok(vec![
            t,
            libm::sqrt(e.max(0.0)),
            u.l2_norm(),
            hk_f,
            hk2_a,
            hm_b,
            energy_defect,
            div(hk_f, three * libm::exp(-0.625 * self.rate * t)),
            div(hk2_a, three),
            div(hm_b, three * libm::exp(0.125 * self.rate * t)),
            div(hk1_u, self.c_u * self.eps * libm::exp(-0.325 * self.rate * t)),
        ])
    }
}

/// Integrates from `b0` to `cfg.t_end`, sampling every `cfg.sample_every`.
///
/// `energy_defect` at a sample is
/// `(E(t_n) - E(t_{n-1})) / (t_n - t_{n-1}) + (1 / (t_n - t_{n-1})) int ||u||^2 dt`
/// with `E = ||B||^2 / 2`; it is zero in the first row. The ratio columns
/// divide the monitored norms by the bounds
/// `3 eps e^{-5/8 (c0/c_P)^2 t}`, `3 eps`, `3 eps e^{1/8 (c0/c_P)^2 t}` and
/// `C eps e^{-13/40 (c0/c_P)^2 t}` with `c_P = 1` and `eps = ||b0||_{H^m}`.
pub fn run_mre(b0: ChannelField, shear: &ShearProfile, cfg: &MreRunConfig) -> Result<MreRun> {
    if !(cfg.t_end >= 0.0 && cfg.sample_every > 0.0) {
        return Err(Error::InvalidParameter("need t_end >= 0 and sample_every > 0".into()));
    }
    if let Some(dt) = cfg.dt {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
    }
    let state = MreState::new(0.0, b0)?;
    let m = cfg.m.min(MAX_SOBOLEV_ORDER);
    let eps = sobolev_norm_vec(&state.b, m)?;
    let c0 = shear.c0();
    let c_p = ops::poincare_constant().sharp;
    let kw = (cfg.k + 2) as u32;
    let sampler = Sampler {
        shear,
        cfg,
        eps,
        rate: (c0 / c_p) * (c0 / c_p),
        c_u: cfg.c_mk * (1.0 + shear.wk_inf(kw)),
        e_bg: background_energy(shear),
    };
    let mut series = DiagSeries::new(&MRE_COLUMNS);
    series.push(sampler.row(&state, 0.0)?)?;
    let l2_b0_sq = 2.0 * (sampler.e_bg + energy_excess(&state.b, shear));
    let mut snapshots = Vec::new();
    if cfg.keep_snapshots {
        snapshots.push(state.clone());
    }

    let mut st = state;
    let mut max_drift: f64 = 0.0;
    let mut steps = 0usize;
    let n_samples = libm::ceil(cfg.t_end / cfg.sample_every - 1e-9) as usize;
    for s in 1..=n_samples {
        let t_next = (s as f64 * cfg.sample_every).min(cfg.t_end);
        let interval = t_next - st.t;
        let dt_lim = match cfg.dt {
            Some(dt) => dt,
            None => cfl_limit(&velocity(&st.b, shear)?, shear, cfg.step.cfl),
        };
        let n = libm::ceil(interval / dt_lim - 1e-9).max(1.0) as usize;
        let dt = interval / n as f64;
        let e_prev = energy_excess(&st.b, shear);
        let mut diss = 0.0;
        for _ in 0..n {
            let (next, info) = step(&st, shear, dt, &cfg.step)?;
            diss += info.dissipation;
            max_drift = max_drift.max(info.drift);
            st = next;
            steps += 1;
        }
        st.t = t_next;
        let defect = (energy_excess(&st.b, shear) - e_prev + diss) / interval;
        series.push(sampler.row(&st, defect)?)?;
        if cfg.keep_snapshots {
            snapshots.push(st.clone());
        }
    }
    Ok(MreRun { series, eps, c0, c_p, l2_b0_sq, snapshots, final_state: st, max_drift, steps })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Report {
    pub max_ratio_fperp: f64,
    pub max_ratio_a: f64,
    pub max_ratio_m: f64,
    pub max_ratio_u: f64,
    /// `||P_perp b(T)||_{L^2} / eps`.
    pub final_fperp_over_eps: f64,
    /// All four ratios `<= 1 + slack`.
    pub bounds_hold: bool,
}

pub fn theorem1_monitor(run: &MreRun, slack: f64) -> Theorem1Report {
    let max = |c: &str| run.series.column(c).unwrap_or_default().into_iter().fold(0.0, f64::max);
    let (f, a, m, u) = (max("ratio_fperp"), max("ratio_a"), max("ratio_m"), max("ratio_u"));
    let fin = run.final_state.f().l2_norm();
    let lim = 1.0 + slack;
    Theorem1Report {
        max_ratio_fperp: f,
        max_ratio_a: a,
        max_ratio_m: m,
        max_ratio_u: u,
        final_fperp_over_eps: if run.eps > 0.0 { fin / run.eps } else { 0.0 },
        bounds_hold: f <= lim && a <= lim && m <= lim && u <= lim,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AEvolutionReport {
    /// `max |da/dt - d2 P0(f2 w1 - f1 w2)|` over interior snapshots and nodes.
    pub max_mismatch: f64,
    /// Largest `|d2 P0(f2 w1 - f1 w2)|`.
    pub scale: f64,
    /// `max_mismatch / scale` (0 when both vanish).
    pub relative: f64,
}

/// Compares the centred time difference of `a = P0 b1` over consecutive,
/// equally spaced snapshots with `d2 P0(f2 w1 - f1 w2)`, `w = P_perp u`.
pub fn a_evolution_check(states: &[MreState], shear: &ShearProfile) -> Result<AEvolutionReport> {
    if states.len() < 3 {
        return Err(Error::InvalidParameter("need at least three snapshots".into()));
    }
    let mut max_mismatch: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for win in states.windows(3) {
        let dt = win[2].t - win[0].t;
        if !(win[1].t > win[0].t && win[2].t > win[1].t) {
            return Err(Error::InvalidParameter("snapshot times must increase".into()));
        }
        let a0 = win[0].a();
        let a2 = win[2].a();
        let st = &win[1];
        let f = st.f();
        let w = ops::pperp_vec(&velocity(&st.b, shear)?);
        let flux = f.c2.mul(&w.c1).sub(&f.c1.mul(&w.c2));
        let prof = ops::p0_profile(&flux);
        let mut rhs = vec![0.0; prof.len()];
        ops::fd_derivative(&prof, st.b.grid().h2(), &mut rhs);
        for j in 0..prof.len() {
            let lhs = (a2[j] - a0[j]) / dt;
            max_mismatch = max_mismatch.max((lhs - rhs[j]).abs());
            scale = scale.max(rhs[j].abs());
        }
    }
    let relative = if scale > 0.0 { max_mismatch / scale } else if max_mismatch == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(AEvolutionReport { max_mismatch, scale, relative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;
    use crate::rng::seeded;

    #[test]
    fn initial_perturbation_is_admissible() {
        let g = Grid::channel(16, 33).unwrap();
        let b = initial_perturbation(g, &mut seeded(11, 0), 1e-3, 4).unwrap();
        assert!((sobolev_norm_vec(&b, 4).unwrap() - 1e-3).abs() < 1e-15);
        assert!(ops::p0(&b.c2).max_abs() < 1e-18);
        assert!(MreState::new(0.0, b).is_ok());
    }

    #[test]
    fn zero_run_has_zero_numerators() {
        let g = Grid::channel(8, 17).unwrap();
        let s = ShearProfile::new(Profile::Const(1.0), g).unwrap();
        let cfg = MreRunConfig { t_end: 0.5, sample_every: 0.25, ..Default::default() };
        let run = run_mre(ChannelField::zeros(g), &s, &cfg).unwrap();
        assert_eq!(run.series.len(), 3);
        let rep = theorem1_monitor(&run, 0.1);
        assert_eq!(rep.max_ratio_fperp, 0.0);
        assert!(rep.bounds_hold);
        let a = a_evolution_check(&[run.final_state.clone(), run.final_state.clone(), {
            let mut s = run.final_state.clone();
            s.t = 1.0;
            s
        }], &s);
        assert!(a.is_err());
    }

    #[test]
    fn short_run_dissipates_energy() {
        let g = Grid::channel(16, 33).unwrap();
        let s = ShearProfile::new(Profile::Linear { c0: 1.0, slope: 0.05 }, g).unwrap();
        let b0 = initial_perturbation(g, &mut seeded(5, 0), 0.05, 4).unwrap();
        let cfg = MreRunConfig { t_end: 1.0, sample_every: 0.25, ..Default::default() };
        let run = run_mre(b0, &s, &cfg).unwrap();
        let e = run.series.column("l2_B").unwrap();
        assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let defect = run.series.column("energy_defect").unwrap();
        let max_defect = defect.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max_defect < 1e-6 * run.l2_b0_sq, "{max_defect}");
        assert!(run.max_drift < 1e-3, "{}", run.max_drift);
    }
}

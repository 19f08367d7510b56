use std::f64::consts::PI;

use mrelab_core::elliptic::{leray, solenoidal_residual};
use mrelab_core::ops::{d1, d2, p0, p0_vec, pperp, sobolev_norm};
use mrelab_core::orbit::{heat_on_orbit_oracle, orbit_average, FlowMap};
use mrelab_core::rng::{band_limited_field, seeded};
use mrelab_core::scalar::{b_grad, scalar_cfl_limit, step_scalar, AdvectingField, ScalarState};
use mrelab_core::{ChannelField, Grid, ScalarField};
use proptest::prelude::*;

fn random(grid: Grid, seed: u64, k1: usize, k2: usize) -> ScalarField {
    band_limited_field(grid, &mut seeded(seed, 0), k1, k2).unwrap()
}

fn rel(a: &ScalarField, b: &ScalarField) -> f64 {
    a.sub(b).l2_norm() / b.l2_norm().max(a.l2_norm()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn averaging_partition(seed in any::<u64>()) {
        let g = Grid::channel(16, 17).unwrap();
        let f = random(g, seed, 5, 6);
        prop_assert!(p0(&f).add(&pperp(&f)).sub(&f).max_abs() <= 1e-13 * f.max_abs());
        prop_assert!(p0(&pperp(&f)).max_abs() <= 1e-13 * f.max_abs());
        prop_assert!(rel(&p0(&p0(&f)), &p0(&f)) <= 1e-14);
        prop_assert!(d1(&p0(&f)).max_abs() <= 1e-12 * f.max_abs());
        prop_assert!(rel(&p0(&d2(&f)), &d2(&p0(&f))) <= 1e-12);
    }

    #[test]
    fn channel_poincare(seed in any::<u64>()) {
        let g = Grid::channel(16, 17).unwrap();
        let f = random(g, seed, 6, 4);
        prop_assert!(pperp(&f).l2_norm() <= d1(&f).l2_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn leray_outputs_are_fixed_points(seed in any::<u64>()) {
        let g = Grid::channel(16, 17).unwrap();
        let h = ChannelField::new(random(g, seed, 4, 5), random(g, seed ^ 0x5555, 4, 5)).unwrap();
        let ph = leray(&h).unwrap();
        let (div, wall) = solenoidal_residual(&ph).unwrap();
        prop_assert!(div < 1e-10 && wall == 0.0);
        prop_assert!(leray(&ph).unwrap().sub(&ph).l2_norm() <= 1e-10 * h.l2_norm());
        prop_assert!(p0(&ph.c2).max_abs() <= 1e-12 * h.max_abs());
        prop_assert!(leray(&p0_vec(&h)).unwrap().sub(&p0_vec(&ph)).l2_norm() <= 1e-10 * h.l2_norm());
        // The projection does not increase the discrete energy.
        prop_assert!(ph.l2_norm() <= h.l2_norm() * (1.0 + 1e-2));
    }

    #[test]
    fn sobolev_norm_is_homogeneous(seed in any::<u64>(), c in -4.0f64..4.0) {
        let g = Grid::channel(16, 17).unwrap();
        let f = random(g, seed, 3, 3);
        for k in 0..=4 {
            let a = sobolev_norm(&f.scale(c), k).unwrap();
            let b = c.abs() * sobolev_norm(&f, k).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn cellular_step_dissipates(seed in any::<u64>()) {
        let g = Grid::torus(16, 16).unwrap();
        let f = random(g, seed, 3, 3);
        let st = ScalarState::new(0.0, f.clone(), AdvectingField::SinSin).unwrap();
        let dt = scalar_cfl_limit(&st.field, &g);
        let next = step_scalar(&st, dt).unwrap();
        prop_assert!(next.g.l2_norm() <= f.l2_norm() * (1.0 + 1e-14));
        // B . grad is skew: <B.grad f, f> = 0.
        let bg = b_grad(&AdvectingField::SinSin, &f).unwrap();
        prop_assert!(bg.dot(&f).abs() <= 1e-12 * f.l2_norm() * bg.l2_norm().max(1.0));
    }

    #[test]
    fn cellular_orbits_are_closed(y in 0.2f64..1.4, x in 0.3f64..1.5) {
        let g = Grid::torus(16, 16).unwrap();
        let flow = FlowMap::for_grid(AdvectingField::SinSin, &g).unwrap().with_samples(64);
        let o = flow.detect_period([x, y]).unwrap();
        prop_assert!(o.psi_drift <= 1e-8);
        prop_assert!(o.return_error <= 1e-6);
        prop_assert_eq!(o.shift, [0, 0]);
        let again = flow.detect_period(o.samples[17]).unwrap();
        prop_assert!((again.period - o.period).abs() <= 1e-7 * o.period);
    }

    #[test]
    fn rotation_period(r in 0.02f64..0.99, th in 0.0f64..(2.0 * PI)) {
        let flow = FlowMap::for_grid(AdvectingField::Rotation, &Grid::disk(16, 8).unwrap()).unwrap().with_samples(16);
        let o = flow.detect_period([r * th.cos(), r * th.sin()]).unwrap();
        prop_assert!((o.period - 2.0 * PI).abs() <= 1e-6);
    }

    #[test]
    fn heat_oracle_conserves_mean(a in -2.0f64..2.0, b in -2.0f64..2.0, t in 0.0f64..3.0) {
        let flow = FlowMap::for_grid(AdvectingField::Rotation, &Grid::disk(16, 8).unwrap()).unwrap().with_samples(32);
        let o = flow.detect_period([0.4, 0.0]).unwrap();
        let g = move |p: [f64; 2]| a + b * p[0] * p[1] + p[0].powi(3);
        let out = heat_on_orbit_oracle(&g, &o, t);
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        prop_assert!((mean - orbit_average(&g, &o)).abs() <= 1e-12);
        let max0 = o.samples.iter().map(|p| g(*p).abs()).fold(0.0, f64::max);
        prop_assert!(out.iter().all(|v| v.abs() <= max0 * (1.0 + 1e-9)));
    }
}

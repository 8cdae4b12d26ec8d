use std::sync::OnceLock;

use hyperwave::cutoff::{psi_hat, BumpSpec};
use hyperwave::kernel::cross_integral;
use hyperwave::quadrature::QuadGrid;
use hyperwave::schroedinger::{ball_grid, maximal_field, multiplier};
use hyperwave::specfun::plancherel_density;
use hyperwave::spherical::phi;
use hyperwave::transform::{
    calibrate_normalization, forward, inverse, relative_l2_error, sobolev_norm, ProfileSpec,
    RadialProfile,
};
use hyperwave::{make_space, SpaceParams};
use proptest::prelude::*;

fn h2c() -> &'static SpaceParams {
    static S: OnceLock<SpaceParams> = OnceLock::new();
    S.get_or_init(|| calibrate_normalization(&make_space(2, 1).unwrap()).unwrap())
}

fn h3() -> &'static SpaceParams {
    static S: OnceLock<SpaceParams> = OnceLock::new();
    S.get_or_init(|| calibrate_normalization(&make_space(2, 0).unwrap()).unwrap())
}

fn small_grids() -> (QuadGrid, QuadGrid) {
    (
        QuadGrid::from_origin(6.0, 320).unwrap(),
        QuadGrid::from_origin(40.0, 320).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spherical_functions_are_bounded_and_even(
        m1 in 1i64..6, m2 in 0i64..4, l in 0.0f64..60.0, t in 0.0f64..6.0
    ) {
        let s = make_space(m1, m2).unwrap();
        let v = phi(&s, l, t);
        prop_assert!(v.abs() <= 1.0 + 1e-9);
        prop_assert_eq!(v, phi(&s, -l, t));
    }

    #[test]
    fn multiplier_is_a_unitary_group(
        l in 0.0f64..40.0, t1 in -1.0f64..1.0, t2 in -1.0f64..1.0, a in 1.01f64..4.0
    ) {
        let s = h3();
        let m1 = multiplier(s, l, t1, a).unwrap();
        let m2 = multiplier(s, l, t2, a).unwrap();
        let m12 = multiplier(s, l, t1 + t2, a).unwrap();
        prop_assert!((m1.norm() - 1.0).abs() < 1e-14);
        let phase = (l * l + 1.0).powf(0.5 * a) * (t1.abs() + t2.abs() + 1.0);
        prop_assert!((m1 * m2 - m12).norm() < 1e-15 * phase * 8.0);
    }

    #[test]
    fn psi_hat_is_even(xi in 0.0f64..300.0) {
        let spec = BumpSpec::temporal();
        prop_assert_eq!(psi_hat(&spec, xi).unwrap(), psi_hat(&spec, -xi).unwrap());
    }

    #[test]
    fn plancherel_density_is_positive_and_grows(l in 1e-3f64..500.0) {
        let s = h2c();
        let d = plancherel_density(s, l).unwrap();
        prop_assert!(d > 0.0);
        prop_assert!(plancherel_density(s, 1.01 * l).unwrap() > d);
        prop_assert!(plancherel_density(s, -l).is_err());
    }

    #[test]
    fn cross_integral_is_symmetric(l in 0.0f64..80.0, e in 0.0f64..80.0) {
        let s = h2c();
        prop_assert_eq!(cross_integral(s, l, e).unwrap(), cross_integral(s, e, l).unwrap());
    }

    #[test]
    fn sobolev_norm_scales_and_grows(k in 0.1f64..10.0, s0 in -1.0f64..1.0, ds in 0.0f64..1.0) {
        let sp = h3();
        let grid = QuadGrid::from_origin(64.0, 256).unwrap();
        let fh = ProfileSpec::Family { q: 2.3, cutoff: 16.0 }.sample(sp, &grid).unwrap();
        let n = sobolev_norm(&fh, s0).unwrap();
        prop_assert!((sobolev_norm(&fh.scaled(k), s0).unwrap() - k * n).abs() <= 1e-13 * k * n);
        prop_assert!(sobolev_norm(&fh, s0 + ds).unwrap() >= n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn forward_is_linear(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, w in 2.0f64..6.0) {
        let s = h2c();
        let (radial, spectral) = small_grids();
        let f = |t: f64| (-w * t * t).exp();
        let g = |t: f64| t * t * (-5.0 * t * t).exp();
        let a = forward(&RadialProfile::from_fn(s, radial.clone(), f).unwrap(), &spectral).unwrap();
        let b = forward(&RadialProfile::from_fn(s, radial.clone(), g).unwrap(), &spectral).unwrap();
        let h = RadialProfile::from_fn(s, radial, |t| c1 * f(t) + c2 * g(t)).unwrap();
        let c = forward(&h, &spectral).unwrap();
        let scale = a.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for i in 0..spectral.len() {
            let want = c1 * a.values()[i] + c2 * b.values()[i];
            prop_assert!((c.values()[i] - want).norm() <= 1e-12 * scale * (1.0 + c1.abs() + c2.abs()));
        }
    }

    #[test]
    fn maximal_field_refines_monotonically(tau in 0.4f64..2.0, k in 2usize..12) {
        let s = h3();
        let fh = ProfileSpec::Heat { tau }.sample(s, &QuadGrid::from_origin(12.0, 96).unwrap()).unwrap();
        let ball = ball_grid(6).unwrap();
        let coarse: Vec<f64> = (1..k).map(|i| i as f64 / k as f64).collect();
        let fine: Vec<f64> = (1..2 * k).map(|i| i as f64 / (2 * k) as f64).collect();
        let a = maximal_field(&fh, 2.0, &coarse, &ball).unwrap();
        let b = maximal_field(&fh, 2.0, &fine, &ball).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!(y >= x);
        }
    }

    #[test]
    fn profile_ids_round_trip(q in 0.5f64..8.0, cut in 1.0f64..100.0, tau in 0.1f64..4.0) {
        for p in [ProfileSpec::Family { q, cutoff: cut }, ProfileSpec::Heat { tau }] {
            prop_assert_eq!(ProfileSpec::parse(&p.id()).unwrap(), p);
        }
    }
}

#[test]
fn round_trip_on_complex_hyperbolic_plane() {
    let s = h2c();
    let (radial, spectral) = small_grids();
    let f = RadialProfile::from_fn(s, radial.clone(), |t| (1.0 + t * t) * (-3.0 * t * t).exp()).unwrap();
    let back = inverse(&forward(&f, &spectral).unwrap(), &radial).unwrap();
    assert!(relative_l2_error(&f, &back).unwrap() < 1e-8);
}

#[test]
fn recalibration_is_idempotent() {
    let s = h2c();
    let again = calibrate_normalization(s).unwrap();
    let (a, b) = (s.normalization().unwrap(), again.normalization().unwrap());
    assert!((a.c_norm - b.c_norm).abs() <= 1e-12 * a.c_norm);
}

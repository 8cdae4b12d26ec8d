//! Elementary spherical functions `phi_lambda(t)`.
//!
//! The reference values come from the radial ODE ([`crate::ode`]). Two
//! expansion paths are exposed for cross-checks: the leading term of the local
//! Bessel expansion near the origin and the leading Harish-Chandra term for
//! large `t`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::RadialSolution;
use crate::space::SpaceParams;
use crate::specfun::bessel::{normalized_bessel_at_zero, normalized_bessel_unchecked};
use crate::specfun::cfunc::c_function_standard;

/// Radius up to which the local Bessel expansion is offered.
pub const LOCAL_RADIUS: f64 = 1.0;

// Absolute round-off floor added to fitted error estimates.
const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphericalPath {
    Ode,
    LocalBessel,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalEvalReport {
    pub value: f64,
    pub path: SphericalPath,
    pub est_error: f64,
    pub lambda: f64,
    pub t: f64,
}

fn kappa(space: &SpaceParams, lambda: f64) -> f64 {
    lambda * lambda + space.rho() * space.rho()
}

/// Solves the radial equation for `phi_lambda` and samples it on `grid`.
///
/// The grid must start at 0 and be strictly increasing.
pub fn phi_ode(space: &SpaceParams, lambda: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be finite, got {lambda}")));
    }
    if grid.first() != Some(&0.0) {
        return Err(Error::InvalidParameter("radius grid must start at 0".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || !grid.last().unwrap().is_finite() {
        return Err(Error::InvalidParameter(
            "radius grid must be finite and strictly increasing".into(),
        ));
    }
    let sol = RadialSolution::solve(space, kappa(space, lambda), *grid.last().unwrap())?;
    let mut out = vec![0.0; grid.len()];
    sol.values_sorted(grid, &mut out);
    Ok(out)
}

type SolutionCache = Mutex<HashMap<(u32, u32, u64), Arc<RadialSolution>>>;

fn cache() -> &'static SolutionCache {
    static CACHE: OnceLock<SolutionCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

const CACHE_LIMIT: usize = 4096;

fn cached_solution(space: &SpaceParams, lambda: f64, t: f64) -> Result<Arc<RadialSolution>> {
    let key = (space.m1(), space.m2(), lambda.abs().to_bits());
    if let Some(sol) = cache().lock().unwrap().get(&key) {
        if sol.t_max() >= t {
            return Ok(sol.clone());
        }
    }
    let reach = t.max(8.0);
    let sol = Arc::new(RadialSolution::solve(space, kappa(space, lambda), reach)?);
    let mut map = cache().lock().unwrap();
    if map.len() >= CACHE_LIMIT {
        map.clear();
    }
    let entry = map.entry(key).or_insert_with(|| sol.clone());
    if entry.t_max() < sol.t_max() {
        *entry = sol.clone();
    }
    Ok(entry.clone())
}

/// `phi_lambda(t)` from the cached ODE solution for `|lambda|`.
///
/// The value depends on `lambda` only through `|lambda|`, so `phi_lambda`
/// and `phi_{-lambda}` agree bit for bit. Non-finite input gives NaN.
pub fn phi(space: &SpaceParams, lambda: f64, t: f64) -> f64 {
    if !(lambda.is_finite() && t.is_finite()) {
        return f64::NAN;
    }
    let t = t.abs();
    match cached_solution(space, lambda, t) {
        Ok(sol) => sol.value(t),
        Err(_) => f64::NAN,
    }
}

/// `phi_lambda(t)` and its derivative in `t`.
pub fn phi_with_derivative(space: &SpaceParams, lambda: f64, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0 && t.is_finite() && lambda.is_finite()) {
        return Err(Error::Domain(format!("need finite lambda and t >= 0, got ({lambda}, {t})")));
    }
    Ok(cached_solution(space, lambda, t)?.value_and_derivative(t))
}

/// Report for the ODE path.
pub fn phi_report(space: &SpaceParams, lambda: f64, t: f64) -> Result<SphericalEvalReport> {
    let (value, _) = phi_with_derivative(space, lambda, t)?;
    Ok(SphericalEvalReport {
        value,
        path: SphericalPath::Ode,
        est_error: 1e-12,
        lambda,
        t,
    })
}

fn bessel_order(space: &SpaceParams) -> f64 {
    0.5 * (f64::from(space.n()) - 2.0)
}

fn local_bessel_value(space: &SpaceParams, lambda: f64, t: f64) -> f64 {
    let mu = bessel_order(space);
    let c0 = 2f64.powf(0.5 * f64::from(space.m2())) / normalized_bessel_at_zero(mu);
    let n1 = f64::from(space.n() - 1);
    // t^(n-1)/D(t) evaluated as a product of t/sinh t factors
    let ratio = if t == 0.0 {
        2f64.powi(-(space.m2() as i32))
    } else {
        (n1 * t.ln() - space.density_unchecked(t).ln()).exp()
    };
    c0 * ratio.sqrt() * normalized_bessel_unchecked(mu, (lambda * t).abs())
}

fn local_bessel_shape(space: &SpaceParams, lambda: f64, t: f64) -> f64 {
    let z = (lambda * t).abs();
    let base = t * t;
    if z <= 1.0 {
        base
    } else {
        base * z.powf(-(0.5 * f64::from(space.n() - 1) + 1.0))
    }
}

fn fitted_constant(
    table: &'static Mutex<HashMap<(u32, u32), f64>>,
    space: &SpaceParams,
    fit: impl Fn() -> f64,
) -> f64 {
    let key = (space.m1(), space.m2());
    if let Some(c) = table.lock().unwrap().get(&key) {
        return *c;
    }
    let c = fit();
    table.lock().unwrap().insert(key, c);
    c
}

/// Constant `C` of the error estimate `C t^2 min(1, (lambda t)^-((n-1)/2 + 1))`
/// of the local Bessel path, fitted against the ODE path on `(0, 1]`.
pub fn local_bessel_constant(space: &SpaceParams) -> f64 {
    static TABLE: OnceLock<Mutex<HashMap<(u32, u32), f64>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| Mutex::new(HashMap::new()));
    fitted_constant(table, space, || {
        let mut worst: f64 = 0.0;
        for &l in &[0.0, 0.3, 1.0, 2.5, 6.0, 15.0, 40.0, 100.0] {
            for i in 1..=64 {
                let t = LOCAL_RADIUS * i as f64 / 64.0;
                let diff = (local_bessel_value(space, l, t) - phi(space, l, t)).abs();
                let excess = (diff - ROUNDOFF_FLOOR).max(0.0);
                worst = worst.max(excess / local_bessel_shape(space, l, t));
            }
        }
        1.5 * worst
    })
}

/// Leading term `c0 [t^(n-1)/D(t)]^(1/2) J_{(n-2)/2}(lambda t)` of the local
/// Bessel expansion, with `c0` fixed by `phi(0) = 1`.
///
/// Only `m = 0` is available.
pub fn phi_local_bessel(
    space: &SpaceParams,
    lambda: f64,
    t: f64,
    m: u32,
) -> Result<SphericalEvalReport> {
    if m != 0 {
        return Err(Error::InvalidParameter(format!(
            "only the leading term (M = 0) of the local expansion is available, got M = {m}"
        )));
    }
    if !(t > 0.0 && t <= LOCAL_RADIUS) {
        return Err(Error::Domain(format!(
            "local Bessel expansion needs 0 < t <= {LOCAL_RADIUS}, got {t}"
        )));
    }
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be finite, got {lambda}")));
    }
    let c = local_bessel_constant(space);
    Ok(SphericalEvalReport {
        value: local_bessel_value(space, lambda, t),
        path: SphericalPath::LocalBessel,
        est_error: c * local_bessel_shape(space, lambda, t) + ROUNDOFF_FLOOR,
        lambda,
        t,
    })
}

fn asymptotic_value(space: &SpaceParams, lambda: f64, t: f64) -> Result<(f64, f64)> {
    let c = c_function_standard(space, lambda)?;
    let w = Complex64::new(-space.rho() * t, lambda * t).exp();
    Ok((2.0 * (c * w).re, 2.0 * c.norm() * (-space.rho() * t).exp()))
}

fn asymptotic_shape(t: f64) -> f64 {
    let q = (-2.0 * t).exp();
    q / (1.0 - q)
}

/// Constant of the error estimate of the leading Harish-Chandra term, fitted
/// against the ODE path on `lambda in (1, 50]`, `t in [1, 6]`.
pub fn asymptotic_constant(space: &SpaceParams) -> f64 {
    static TABLE: OnceLock<Mutex<HashMap<(u32, u32), f64>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| Mutex::new(HashMap::new()));
    fitted_constant(table, space, || {
        let mut worst: f64 = 0.0;
        for &l in &[1.05, 1.5, 2.0, 3.5, 6.0, 12.0, 25.0, 50.0] {
            for i in 0..=50 {
                let t = 1.0 + 0.1 * i as f64;
                let (v, env) = asymptotic_value(space, l, t).expect("lambda > 1");
                let diff = (v - phi(space, l, t)).abs();
                worst = worst.max(diff / (env * asymptotic_shape(t)));
            }
        }
        1.5 * worst
    })
}

/// Leading Harish-Chandra term `2 Re[c(lambda) e^((i lambda - rho) t)]` with the
/// c-function normalized by `c(-i rho) = 1`.
///
/// The first omitted term is of relative size `e^(-2t)`; the estimate is
/// `C 2|c(lambda)| e^(-rho t) e^(-2t) / (1 - e^(-2t))`.
pub fn phi_asymptotic_leading(space: &SpaceParams, lambda: f64, t: f64) -> Result<SphericalEvalReport> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "leading Harish-Chandra term needs lambda > 1, got {lambda}"
        )));
    }
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "leading Harish-Chandra term needs t >= 1, got {t}"
        )));
    }
    let (value, env) = asymptotic_value(space, lambda, t)?;
    Ok(SphericalEvalReport {
        value,
        path: SphericalPath::Asymptotic,
        est_error: asymptotic_constant(space) * env * asymptotic_shape(t) + ROUNDOFF_FLOOR,
        lambda,
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::make_space;
    use approx::assert_relative_eq;

    fn h3() -> SpaceParams {
        make_space(2, 0).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let s = h3();
        assert_eq!(phi(&s, 3.0, 0.0), 1.0);
        assert_relative_eq!(phi(&s, 1.0, 1.0), 0.716_022_915_360_433_9, epsilon = 1e-12);
        assert_relative_eq!(phi(&s, 0.0, 2.0), 0.551_441_129_543_566_4, epsilon = 1e-12);
        assert_relative_eq!(phi(&s, 2.0, 0.5), 0.807_406_031_043_195_9, epsilon = 1e-12);
    }

    #[test]
    fn ode_grid_validation() {
        let s = h3();
        assert!(phi_ode(&s, 1.0, &[0.1, 0.2]).is_err());
        assert!(phi_ode(&s, 1.0, &[0.0, 0.2, 0.2]).is_err());
        let v = phi_ode(&s, 1.0, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(v[0], 1.0);
        assert_relative_eq!(v[2], 1f64.sin() / 1f64.sinh(), epsilon = 1e-12);
    }

    #[test]
    fn symmetric_in_lambda() {
        for (m1, m2) in [(2, 0), (2, 1), (4, 3)] {
            let s = make_space(m1, m2).unwrap();
            for &l in &[0.3, 4.0, 17.0] {
                for &t in &[0.1, 1.3, 4.0] {
                    assert_eq!(phi(&s, l, t), phi(&s, -l, t));
                }
            }
        }
    }

    #[test]
    fn local_bessel_is_exact_on_h3() {
        let s = h3();
        for &(l, t) in &[(5.0, 0.1), (50.0, 0.1), (0.5, 0.9), (3.0, 1e-4)] {
            let r = phi_local_bessel(&s, l, t, 0).unwrap();
            assert!((r.value - phi(&s, l, t)).abs() <= r.est_error);
            assert!((r.value - (l * t).sin() / (l * t.sinh())).abs() < 1e-12);
        }
        assert!(phi_local_bessel(&s, 1.0, 1.5, 0).is_err());
        assert!(phi_local_bessel(&s, 1.0, 0.5, 1).is_err());
        assert!(phi_local_bessel(&s, 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn local_bessel_within_estimate() {
        for (m1, m2) in [(2, 1), (4, 3), (8, 7), (3, 0)] {
            let s = make_space(m1, m2).unwrap();
            assert!(local_bessel_constant(&s) > 0.0);
            for &l in &[0.7, 4.5, 23.0, 77.0] {
                for i in 1..20 {
                    let t = 0.0513 * i as f64;
                    let r = phi_local_bessel(&s, l, t, 0).unwrap();
                    let d = (r.value - phi(&s, l, t)).abs();
                    assert!(d <= r.est_error, "({m1},{m2}) lambda = {l}, t = {t}: {d} > {}", r.est_error);
                }
            }
            let near = phi_local_bessel(&s, 9.0, 1e-6, 0).unwrap().value;
            assert_relative_eq!(near, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn asymptotic_leading_term() {
        let s = h3();
        let r = phi_asymptotic_leading(&s, 10.0, 3.0).unwrap();
        let exact = phi(&s, 10.0, 3.0);
        assert!((r.value - exact).abs() < 1e-2 * exact.abs().max(1e-3 * r.value.abs()));
        assert!((r.value - exact).abs() <= r.est_error);
        assert!(phi_asymptotic_leading(&s, 1.0, 2.0).is_err());
        assert!(phi_asymptotic_leading(&s, 2.0, 0.5).is_err());
        for (m1, m2) in [(2, 1), (4, 3)] {
            let s = make_space(m1, m2).unwrap();
            let mut prev = f64::INFINITY;
            for &t in &[1.0, 2.0, 4.0, 8.0] {
                let r = phi_asymptotic_leading(&s, 5.0, t).unwrap();
                let rel = (r.value - phi(&s, 5.0, t)).abs() * (s.rho() * t).exp();
                assert!(rel < prev);
                prev = rel;
                let c = c_function_standard(&s, 5.0).unwrap().norm();
                assert!(r.value.abs() <= 2.0 * c * (-s.rho() * t).exp() * (1.0 + 1e-12));
            }
        }
    }
}

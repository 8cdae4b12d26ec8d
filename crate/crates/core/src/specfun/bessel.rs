//! Bessel functions of the first kind for real order and argument, and the
//! normalized Bessel function used in the local expansion of spherical functions.
//!
//! Small arguments use the power series. Beyond the switch point
//! `max(12, min(2 mu, mu + 12))` orders below 2 use Hankel's asymptotic
//! expansion directly; higher orders are reached from the two lowest orders
//! of the same fractional part by forward recurrence, which is stable there
//! because the order stays below the argument.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::specfun::gamma::ln_gamma;

/// Argument at which evaluation switches from the series to the asymptotic expansion.
pub fn switch_point(mu: f64) -> f64 {
    12f64.max((2.0 * mu).min(mu + 12.0))
}

/// Value at the origin of the normalized Bessel function:
/// `Gamma(mu + 1/2) sqrt(pi) / (2 Gamma(mu + 1))`.
pub fn normalized_bessel_at_zero(mu: f64) -> f64 {
    0.5 * PI.sqrt() * (ln_gamma(mu + 0.5) - ln_gamma(mu + 1.0)).exp()
}

/// `J_mu(z) / z^mu * Gamma(mu + 1/2) Gamma(1/2) 2^(mu - 1)`.
///
/// Finite at `z = 0`. Equals `sin z / z` for `mu = 1/2`.
pub fn normalized_bessel(mu: f64, z: f64) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::Domain(format!("normalized Bessel needs mu >= 0, got {mu}")));
    }
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("normalized Bessel needs z >= 0, got {z}")));
    }
    Ok(normalized_bessel_unchecked(mu, z))
}

pub(crate) fn normalized_bessel_unchecked(mu: f64, z: f64) -> f64 {
    if z <= switch_point(mu) {
        normalized_bessel_at_zero(mu) * reduced_series(mu, z)
    } else {
        let log_pref = ln_gamma(mu + 0.5) + 0.5 * PI.ln() + (mu - 1.0) * 2f64.ln() - mu * z.ln();
        bessel_j_large(mu, z) * log_pref.exp()
    }
}

/// Bessel function of the first kind `J_mu(z)` for `mu >= 0`, `z >= 0`.
pub fn bessel_j(mu: f64, z: f64) -> Result<f64> {
    if !(mu >= 0.0) || !(z >= 0.0) {
        return Err(Error::Domain(format!("bessel_j needs mu, z >= 0 (mu = {mu}, z = {z})")));
    }
    if z == 0.0 {
        return Ok(if mu == 0.0 { 1.0 } else { 0.0 });
    }
    if z <= switch_point(mu) {
        let log_pref = mu * (0.5 * z).ln() - ln_gamma(mu + 1.0);
        Ok(log_pref.exp() * reduced_series(mu, z))
    } else {
        Ok(bessel_j_large(mu, z))
    }
}

fn bessel_j_large(mu: f64, z: f64) -> f64 {
    if mu < 2.0 {
        return bessel_j_asymptotic(mu, z);
    }
    let mut nu = mu - mu.floor();
    let mut prev = bessel_j_asymptotic(nu, z);
    let mut cur = bessel_j_asymptotic(nu + 1.0, z);
    nu += 1.0;
    while nu < mu - 0.5 {
        let next = 2.0 * nu / z * cur - prev;
        prev = cur;
        cur = next;
        nu += 1.0;
    }
    cur
}

// sum_k (-z^2/4)^k / (k! (mu+1)_k)
fn reduced_series(mu: f64, z: f64) -> f64 {
    let x = -0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= x / (k * (mu + k));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && k > 0.5 * z {
            break;
        }
        if k > 500.0 {
            break;
        }
    }
    sum
}

/// Hankel's expansion `sqrt(2/(pi z)) (P cos chi - Q sin chi)`, truncated at
/// the smallest term.
pub(crate) fn bessel_j_asymptotic(mu: f64, z: f64) -> f64 {
    let four_mu2 = 4.0 * mu * mu;
    let eight_z = 8.0 * z;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (four_mu2 - odd * odd) / (k as f64 * eight_z);
        let mag = term.abs();
        if mag > last || mag == 0.0 {
            break;
        }
        // a_k enters P for even k and Q for odd k with alternating signs
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if mag < 1e-17 * p.abs().max(q.abs()) {
            break;
        }
        last = mag;
    }
    let chi = z - (0.5 * mu * PI + FRAC_PI_4);
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Upper bound `Gamma(mu + 1/2) Gamma(1/2) 2^(mu - 1) t^-(mu + 1/2)` on the
/// normalized Bessel function for `t >= 1`.
pub fn normalized_bessel_decay_bound(mu: f64, t: f64) -> f64 {
    (ln_gamma(mu + 0.5) + 0.5 * PI.ln() + (mu - 1.0) * 2f64.ln() - (mu + 0.5) * t.ln()).exp()
}

/// Spherical Bessel functions `j_0(z), ..., j_kmax(z)` for `z >= 0`.
pub(crate) fn spherical_bessel_all(kmax: usize, z: f64, out: &mut [f64]) {
    debug_assert!(out.len() > kmax);
    if z < 1e-3 * (kmax.max(1) as f64) {
        // series: j_k(z) = z^k / (2k+1)!! * (1 - z^2/(2(2k+3)) + z^4/(8(2k+3)(2k+5)) ...)
        let z2 = z * z;
        let mut lead = 1.0;
        for k in 0..=kmax {
            if k > 0 {
                lead *= z / (2 * k + 1) as f64;
            }
            let a = (2 * k + 3) as f64;
            let b = (2 * k + 5) as f64;
            out[k] = lead * (1.0 - z2 / (2.0 * a) * (1.0 - z2 / (4.0 * b)));
        }
        return;
    }
    let (s, c) = z.sin_cos();
    let j0 = s / z;
    if z >= kmax as f64 {
        out[0] = j0;
        if kmax >= 1 {
            out[1] = s / (z * z) - c / z;
        }
        for k in 1..kmax {
            out[k + 1] = (2 * k + 1) as f64 / z * out[k] - out[k - 1];
        }
        return;
    }
    // Miller's backward recurrence, normalized against j_0.
    let start = kmax + 20 + (z as usize);
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut tmp = vec![0.0; kmax + 1];
    for k in (1..=start).rev() {
        let prev = (2 * k + 1) as f64 / z * cur - next;
        next = cur;
        cur = prev;
        if k - 1 <= kmax {
            tmp[k - 1] = cur;
        }
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            for v in tmp.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    // j_0 may vanish; fall back to j_1 for the normalization then
    let scale = if j0.abs() > 0.1 * (1.0 / z).min(1.0) {
        j0 / tmp[0]
    } else {
        let j1 = s / (z * z) - c / z;
        j1 / tmp[1]
    };
    for k in 0..=kmax {
        out[k] = tmp[k] * scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Poisson integral: normalized Bessel = 1/2 * int_0^pi cos(z cos th) sin^(2 mu) th dth,
    // evaluated with a high-order Gauss-Legendre rule.
    fn poisson_oracle(mu: f64, z: f64) -> f64 {
        let (x, w) = crate::quadrature::gauss_legendre(160);
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let th = 0.5 * PI * (xi + 1.0);
            acc += wi * (z * th.cos()).cos() * th.sin().powf(2.0 * mu);
        }
        0.25 * PI * acc
    }

    #[test]
    fn half_integer_closed_form() {
        assert_relative_eq!(normalized_bessel(0.5, 0.0).unwrap(), 1.0, epsilon = 1e-14);
        assert!(normalized_bessel(0.5, PI).unwrap().abs() < 1e-15);
        for i in 1..200 {
            let z = 0.173 * i as f64;
            assert_relative_eq!(
                normalized_bessel(0.5, z).unwrap(),
                z.sin() / z,
                epsilon = 2e-12
            );
        }
        // J_{1/2}(z) = sqrt(2/(pi z)) sin z
        for &z in &[0.3, 5.0, 11.9, 12.1, 40.0, 1000.0] {
            assert_relative_eq!(
                bessel_j(0.5, z).unwrap(),
                (2.0 / (PI * z)).sqrt() * z.sin(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn agrees_with_poisson_integral() {
        for mu2 in 0..=60 {
            let mu = 0.5 * mu2 as f64;
            for i in 0..=40 {
                let z = 0.5 * i as f64;
                let got = normalized_bessel(mu, z).unwrap();
                let want = poisson_oracle(mu, z);
                assert!(
                    (got - want).abs() <= 1e-10,
                    "mu = {mu}, z = {z}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn regimes_agree_at_switch() {
        for mu2 in 0..=24 {
            let mu = 0.5 * mu2 as f64;
            let z = switch_point(mu);
            let series = normalized_bessel_at_zero(mu) * reduced_series(mu, z);
            let log_pref =
                ln_gamma(mu + 0.5) + 0.5 * PI.ln() + (mu - 1.0) * 2f64.ln() - mu * z.ln();
            let asym = bessel_j_large(mu, z) * log_pref.exp();
            assert!((series - asym).abs() <= 1e-9, "mu = {mu}: {series} vs {asym}");
        }
    }

    #[test]
    fn integer_order_values() {
        // reference values of J_0, J_1 at a few points
        assert_relative_eq!(bessel_j(0.0, 1.0).unwrap(), 0.765_197_686_557_966_6, epsilon = 1e-15);
        assert_relative_eq!(bessel_j(1.0, 2.5).unwrap(), 0.497_094_102_464_274_4, epsilon = 1e-14);
        assert_relative_eq!(bessel_j(0.0, 30.0).unwrap(), -0.086_367_983_581_040_2, epsilon = 1e-14);
        assert_relative_eq!(bessel_j(3.0, 14.0).unwrap(), -0.176_809_406_865_096_1, epsilon = 1e-14);
    }

    #[test]
    fn decay_bound_holds() {
        let v = normalized_bessel(0.5, 10.0).unwrap().abs();
        assert!(v <= normalized_bessel_decay_bound(0.5, 10.0));
        for mu2 in 0..=14 {
            let mu = 0.5 * mu2 as f64;
            for i in 0..400 {
                let t = 1.0 + 0.25 * i as f64;
                assert!(
                    normalized_bessel(mu, t).unwrap().abs()
                        <= normalized_bessel_decay_bound(mu, t) * (1.0 + 1e-12),
                    "mu = {mu}, t = {t}"
                );
            }
        }
    }

    #[test]
    fn rejects_negative_order() {
        assert!(normalized_bessel(-0.5, 1.0).is_err());
        assert!(normalized_bessel(0.5, -1.0).is_err());
    }

    #[test]
    fn spherical_bessel_matches_closed_forms() {
        let mut out = [0.0; 16];
        for &z in &[1e-5, 0.002, 0.3, 1.0, 3.7, 7.9, 12.0, 60.0, 800.0] {
            spherical_bessel_all(15, z, &mut out);
            let (s, c) = z.sin_cos();
            let j0 = s / z;
            let j1 = s / (z * z) - c / z;
            let j2 = (3.0 / (z * z) - 1.0) * s / z - 3.0 * c / (z * z);
            assert_relative_eq!(out[0], j0, epsilon = 1e-14);
            if z > 0.1 {
                assert_relative_eq!(out[1], j1, epsilon = 1e-13);
                assert_relative_eq!(out[2], j2, epsilon = 1e-12);
            }
            // j_k = sqrt(pi/(2z)) J_{k+1/2}
            for k in 0..16 {
                let want = (PI / (2.0 * z)).sqrt() * bessel_j(k as f64 + 0.5, z).unwrap();
                assert!((out[k] - want).abs() < 1e-12, "k = {k}, z = {z}: {} vs {want}", out[k]);
            }
        }
    }
}

//! Complex log-Gamma by Stirling's series with an upward shift.

use num_complex::Complex64;

use crate::error::{Error, Result};

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

// B_{2k} / (2k (2k - 1)) for k = 1..=10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43_867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

// Below this modulus the Stirling tail is not yet at round-off level.
const STIRLING_MIN: f64 = 15.0;

/// Principal branch of `log Gamma(z)`.
///
/// The branch is the analytic continuation from the positive real axis in the
/// plane slit along the negative reals, i.e. the same one as `scipy.special.loggamma`.
pub fn log_gamma_complex(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.floor() {
        return Err(Error::GammaPole(z.re));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("log_gamma of non-finite {z}")));
    }
    let far_right = z.re >= 0.0 && z.norm() >= 2.0 * STIRLING_MIN;
    if z.re >= STIRLING_MIN || far_right {
        return Ok(stirling(z));
    }
    let shift = (STIRLING_MIN - z.re).ceil() as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..shift {
        acc += (z + k as f64).ln();
    }
    Ok(stirling(z + shift as f64) - acc)
}

fn stirling(z: Complex64) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for c in STIRLING {
        series += pow * c;
        pow *= inv2;
    }
    (z - 0.5) * z.ln() - z + HALF_LN_TWO_PI + series
}

/// `log Gamma(x)` for real `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    log_gamma_complex(Complex64::new(x, 0.0))
        .map(|v| v.re)
        .unwrap_or(f64::INFINITY)
}

/// `Gamma(x)` for real `x > 0`.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

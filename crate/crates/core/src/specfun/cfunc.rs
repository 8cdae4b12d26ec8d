//! The Harish-Chandra c-function of a rank-one space and its Plancherel density.
//!
//! In Jacobi form, with `alpha = (m1 + m2 - 1)/2` and `beta = (m2 - 1)/2`,
//!
//! ```text
//! c(lambda) = N 2^(-i lambda) Gamma(i lambda)
//!             / [Gamma((i lambda + rho)/2) Gamma((i lambda + alpha - beta + 1)/2)]
//! ```
//!
//! The constant `N` depends on how the spherical transform is normalized. The
//! choice `N = 2^rho Gamma(alpha + 1)` gives `c(-i rho) = 1`, which is the
//! normalization entering the large-`t` expansion of `phi_lambda`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::SpaceParams;
use crate::specfun::gamma::{ln_gamma, log_gamma_complex};

/// Jacobi parameters `(alpha, beta)` of a rank-one space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiParams {
    pub alpha: f64,
    pub beta: f64,
}

impl JacobiParams {
    pub fn of(space: &SpaceParams) -> Self {
        let (m1, m2) = (f64::from(space.m1()), f64::from(space.m2()));
        Self {
            alpha: 0.5 * (m1 + m2 - 1.0),
            beta: 0.5 * (m2 - 1.0),
        }
    }

    /// `alpha + beta + 1`, which equals `rho`.
    pub fn rho(&self) -> f64 {
        self.alpha + self.beta + 1.0
    }

    /// The constant giving `c(-i rho) = 1`.
    pub fn standard_norm(&self) -> f64 {
        (self.rho() * std::f64::consts::LN_2 + ln_gamma(self.alpha + 1.0)).exp()
    }
}

/// `log c(lambda)` with `N = 1`.
pub(crate) fn log_c_unit(jac: &JacobiParams, lambda: f64) -> Complex64 {
    let il = Complex64::new(0.0, lambda);
    let num = log_gamma_complex(il).expect("lambda > 0 is not a pole");
    let d1 = log_gamma_complex((il + jac.rho()) * 0.5).expect("right half-plane");
    let d2 = log_gamma_complex((il + jac.alpha - jac.beta + 1.0) * 0.5).expect("right half-plane");
    Complex64::new(0.0, -lambda * std::f64::consts::LN_2) + num - d1 - d2
}

/// `|c(lambda)|^-2` with `N = 1`; zero at `lambda = 0`.
pub(crate) fn unit_density(jac: &JacobiParams, lambda: f64) -> f64 {
    let l = lambda.abs();
    if l == 0.0 {
        return 0.0;
    }
    (-2.0 * log_c_unit(jac, l).re).exp()
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "c-function needs lambda > 0 (Gamma(i lambda) has a pole at 0), got {lambda}"
        )))
    }
}

/// The c-function in the calibrated normalization of `space`.
///
/// Fails with [`Error::NotCalibrated`] until the transform constants have been
/// fixed by [`crate::transform::calibrate_normalization`].
pub fn c_function(space: &SpaceParams, lambda: f64) -> Result<Complex64> {
    check_lambda(lambda)?;
    let norm = space.require_normalization()?;
    let jac = JacobiParams::of(space);
    Ok(log_c_unit(&jac, lambda).exp() * norm.c_norm)
}

/// The c-function normalized by `c(-i rho) = 1`.
pub fn c_function_standard(space: &SpaceParams, lambda: f64) -> Result<Complex64> {
    check_lambda(lambda)?;
    let jac = JacobiParams::of(space);
    Ok(log_c_unit(&jac, lambda).exp() * jac.standard_norm())
}

/// Plancherel density `|c(lambda)|^-2` in the calibrated normalization.
pub fn plancherel_density(space: &SpaceParams, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let norm = space.require_normalization()?;
    Ok(unit_density(&JacobiParams::of(space), lambda) / (norm.c_norm * norm.c_norm))
}

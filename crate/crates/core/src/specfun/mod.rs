//! Scalar special functions.

pub mod bessel;
pub mod cfunc;
pub mod gamma;

pub use bessel::{bessel_j, normalized_bessel, normalized_bessel_decay_bound};
pub use cfunc::{c_function, c_function_standard, plancherel_density, JacobiParams};
pub use gamma::{gamma, ln_gamma, log_gamma_complex};

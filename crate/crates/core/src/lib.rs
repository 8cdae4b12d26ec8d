//! Radial harmonic analysis on rank-one symmetric spaces of non-compact type.
//!
//! The crate evaluates elementary spherical functions, the spherical transform
//! and its inverse, the fractional Schroedinger propagator
//! `S_t = exp(it (-Delta)^(a/2))` on radial data, and the quantities that
//! enter the maximal estimate for `S_t`: localized space-time fields, mixed
//! Sobolev norms, maximal functions and the Schur-test kernel.
//!
//! Everything is radial, so a space enters only through its root
//! multiplicities `(m1, m2)`; see [`space::SpaceParams`].

pub mod cutoff;
pub mod error;
pub mod kernel;
pub mod ode;
pub mod quadrature;
pub mod schroedinger;
pub mod space;
pub mod specfun;
pub mod spherical;
pub mod transform;

pub use error::{Error, Result};
pub use space::{make_space, Normalization, SpaceParams};

/// Library version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

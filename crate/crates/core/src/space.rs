//! Rank-one symmetric spaces described by their root multiplicities.
//!
//! A space is fixed by the multiplicities `m1` (of the simple root) and `m2`
//! (of its double). Everything radial depends on the pair only through the
//! Cartan density `D(t) = sinh(t)^m1 * sinh(2t)^m2` and through the c-function.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization constants of the spherical transform pair.
///
/// `forward` multiplies the spherical transform, `inverse` multiplies the
/// inversion integral and `c_norm` is the constant in front of the c-function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub forward: f64,
    pub inverse: f64,
    pub c_norm: f64,
}

/// Geometric presets understood by [`SpaceParams::preset`].
pub const PRESETS: [&str; 5] = ["H3R", "HnR", "H2C", "H2H", "CayP"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    m1: u32,
    m2: u32,
    n: u32,
    rho: f64,
    preset_name: Option<String>,
    normalization: Option<Normalization>,
}

/// Builds the space with multiplicities `(m1, m2)`.
pub fn make_space(m1: i64, m2: i64) -> Result<SpaceParams> {
    if m1 <= 0 {
        return Err(Error::InvalidParameter(format!(
            "multiplicity m1 must be positive, got {m1}"
        )));
    }
    if m2 < 0 {
        return Err(Error::InvalidParameter(format!(
            "multiplicity m2 must be non-negative, got {m2}"
        )));
    }
    let (m1, m2) = (m1 as u32, m2 as u32);
    Ok(SpaceParams {
        m1,
        m2,
        n: m1 + m2 + 1,
        rho: 0.5 * f64::from(m1 + 2 * m2),
        preset_name: None,
        normalization: None,
    })
}

impl SpaceParams {
    /// Looks up a named preset. `HnR` needs the dimension `n >= 2`.
    pub fn preset(name: &str, n: Option<u32>) -> Result<Self> {
        let (m1, m2) = match name {
            "H3R" => (2, 0),
            "H2C" => (2, 1),
            "H2H" => (4, 3),
            "CayP" => (8, 7),
            "HnR" => {
                let n = n.ok_or_else(|| {
                    Error::InvalidParameter("preset HnR needs a dimension n".into())
                })?;
                if n < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "HnR needs n >= 2, got {n}"
                    )));
                }
                (i64::from(n) - 1, 0)
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown space preset '{other}' (expected one of {})",
                    PRESETS.join(", ")
                )))
            }
        };
        let mut space = make_space(m1, m2)?;
        space.preset_name = Some(match name {
            "HnR" => format!("H{}R", space.n),
            other => other.to_string(),
        });
        Ok(space)
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn m2(&self) -> u32 {
        self.m2
    }

    /// Dimension of the space.
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn preset_name(&self) -> Option<&str> {
        self.preset_name.as_deref()
    }

    /// Several of the kernel estimates assume `rho >= 1`.
    pub fn rho_at_least_one(&self) -> bool {
        self.rho >= 1.0
    }

    /// True when `(m1, m2)` is the multiplicity pair of an actual rank-one
    /// symmetric space (real, complex, quaternionic hyperbolic or the Cayley plane).
    pub fn is_geometric(&self) -> bool {
        match (self.m1, self.m2) {
            (_, 0) => true,
            (m1, 1) => m1 >= 2 && m1 % 2 == 0,
            (m1, 3) => m1 >= 4 && m1 % 4 == 0,
            (8, 7) => true,
            _ => false,
        }
    }

    pub fn normalization(&self) -> Option<Normalization> {
        self.normalization
    }

    pub fn is_calibrated(&self) -> bool {
        self.normalization.is_some()
    }

    /// Returns a copy carrying the given normalization constants.
    pub fn with_normalization(&self, norm: Normalization) -> Self {
        Self {
            normalization: Some(norm),
            ..self.clone()
        }
    }

    pub(crate) fn require_normalization(&self) -> Result<Normalization> {
        self.normalization
            .ok_or_else(|| Error::NotCalibrated(self.label()))
    }

    /// Human-readable label: the preset name or `(m1,m2)`.
    pub fn label(&self) -> String {
        match &self.preset_name {
            Some(name) => name.clone(),
            None => format!("({},{})", self.m1, self.m2),
        }
    }

    /// Cartan density `D(t)`; exactly zero at the origin.
    pub fn density(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("density needs t >= 0, got {t}")));
        }
        let d = self.density_unchecked(t);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Range(format!(
                "density overflows at t = {t} for {}",
                self.label()
            )))
        }
    }

    pub(crate) fn density_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        sinh_series(t).powi(self.m1 as i32) * sinh_series(2.0 * t).powi(self.m2 as i32)
    }

    /// `D'(t)/D(t) = m1 coth t + 2 m2 coth 2t`, singular at the origin.
    pub fn log_density_derivative(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!(
                "log-density derivative has a pole at t = 0 (got t = {t})"
            )));
        }
        Ok(self.log_density_derivative_unchecked(t))
    }

    pub(crate) fn log_density_derivative_unchecked(&self, t: f64) -> f64 {
        f64::from(self.m1) / t.tanh() + 2.0 * f64::from(self.m2) / (2.0 * t).tanh()
    }
}

impl fmt::Display for SpaceParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [m1={}, m2={}, n={}, rho={}]",
            self.label(),
            self.m1,
            self.m2,
            self.n,
            self.rho
        )
    }
}

// Near the origin a short series keeps full relative accuracy.
fn sinh_series(t: f64) -> f64 {
    if t < 1e-3 {
        let t2 = t * t;
        t * (1.0 + t2 / 6.0 * (1.0 + t2 / 20.0))
    } else {
        t.sinh()
    }
}

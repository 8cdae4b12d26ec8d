//! Smooth cutoffs: the radial bump `alpha_0`, the temporal bump `psi_0`, and
//! the Fourier transform of `psi = psi_0^2`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, PANEL_ORDER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpKind {
    Spatial,
    Temporal,
}

/// A bump equal to 1 on `|t| <= inner_radius` and 0 on `|t| >= outer_radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub kind: BumpKind,
}

impl BumpSpec {
    pub fn new(inner_radius: f64, outer_radius: f64, kind: BumpKind) -> Result<Self> {
        if !(inner_radius > 0.0 && outer_radius > inner_radius && outer_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bump needs 0 < inner < outer, got inner = {inner_radius}, outer = {outer_radius}"
            )));
        }
        Ok(Self {
            inner_radius,
            outer_radius,
            kind,
        })
    }

    /// `alpha_0`: plateau on the unit ball, support in the ball of radius 2.
    pub fn spatial() -> Self {
        Self {
            inner_radius: 1.0,
            outer_radius: 2.0,
            kind: BumpKind::Spatial,
        }
    }

    /// `psi_0`: plateau on `[-1, 1]`, support in `[-2, 2]`.
    pub fn temporal() -> Self {
        Self {
            inner_radius: 1.0,
            outer_radius: 2.0,
            kind: BumpKind::Temporal,
        }
    }

    fn width(&self) -> f64 {
        self.outer_radius - self.inner_radius
    }
}

fn glue(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

// 0 at x <= 0, 1 at x >= 1
fn transition(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = glue(x);
        a / (a + glue(1.0 - x))
    }
}

fn transition_derivative(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let (a, b) = (glue(x), glue(1.0 - x));
    let (da, db) = (a / (x * x), b / ((1.0 - x) * (1.0 - x)));
    (da * b + a * db) / ((a + b) * (a + b))
}

/// Value of the bump at `t`.
pub fn bump(spec: &BumpSpec, t: f64) -> f64 {
    1.0 - transition((t.abs() - spec.inner_radius) / spec.width())
}

/// Derivative of the bump.
pub fn bump_derivative(spec: &BumpSpec, t: f64) -> f64 {
    let d = -transition_derivative((t.abs() - spec.inner_radius) / spec.width()) / spec.width();
    if t < 0.0 {
        -d
    } else {
        d
    }
}

/// `2 int_0^inf psi(t) cos(xi t) dt` for `psi = psi_0^2`, by Gauss-Legendre
/// panels of width at most `pi / (4 |xi|)` on the transition region.
pub fn psi_hat_direct(spec: &BumpSpec, xi: f64) -> f64 {
    let xi = xi.abs();
    let r = spec.inner_radius;
    let plateau = if xi * r < 1e-8 {
        2.0 * r * (1.0 - (xi * r).powi(2) / 6.0)
    } else {
        2.0 * (xi * r).sin() / xi
    };
    let len = spec.width();
    let mut panels = 64usize;
    if xi > 0.0 {
        panels = panels.max((len * 4.0 * xi / std::f64::consts::PI).ceil() as usize);
    }
    let (x, w) = gauss_legendre(PANEL_ORDER);
    let h = len / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = r + (p as f64 + 0.5) * h;
        let mut part = 0.0;
        for (xi_n, wi) in x.iter().zip(&w) {
            let t = mid + 0.5 * h * xi_n;
            let b = bump(spec, t);
            part += wi * b * b * (xi * t).cos();
        }
        acc += 0.5 * h * part;
    }
    plateau + 2.0 * acc
}

/// Tabulated `psi_hat` on `[0, XI_MAX]` with 4-point interpolation.
#[derive(Debug, Clone)]
pub struct PsiHatTable {
    step: f64,
    values: Vec<f64>,
}

/// End of the tabulated range; beyond it `psi_hat` is below double precision.
pub const XI_MAX: f64 = 1.0e4;

impl PsiHatTable {
    /// Samples `psi` with spacing `dt` on its support and sums the trapezoid
    /// rule for all frequencies at once by FFT. For a smooth compactly
    /// supported `psi` the only error is aliasing from `2 pi / dt - xi`, which
    /// stays outside the decay range for `xi <= XI_MAX`.
    pub fn build(spec: &BumpSpec, log2_len: u32) -> Self {
        let n_pad = 1usize << log2_len;
        let dt = 2.5e-4 * spec.outer_radius / 2.0;
        let step = 2.0 * std::f64::consts::PI / (n_pad as f64 * dt);
        let mut buf = vec![Complex::new(0.0, 0.0); n_pad];
        let samples = (spec.outer_radius / dt).ceil() as usize;
        assert!(2 * samples < n_pad);
        for j in 0..=samples {
            let b = bump(spec, j as f64 * dt);
            let v = b * b;
            buf[j] = Complex::new(v, 0.0);
            if j > 0 {
                buf[n_pad - j] = Complex::new(v, 0.0);
            }
        }
        FftPlanner::new().plan_fft_forward(n_pad).process(&mut buf);
        let keep = ((XI_MAX / step).ceil() as usize + 3).min(n_pad / 2);
        let values = buf[..keep].iter().map(|c| dt * c.re).collect();
        Self { step, values }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interpolated value; even in `xi`, zero beyond the table.
    pub fn eval(&self, xi: f64) -> f64 {
        let x = xi.abs() / self.step;
        let i = x.floor() as usize;
        if i + 2 >= self.values.len() {
            return 0.0;
        }
        // nodes i-1, i, i+1, i+2 (reflected at 0 by evenness)
        let f = |k: isize| self.values[k.unsigned_abs()];
        let s = x - i as f64;
        let ii = i as isize;
        let (f0, f1, f2, f3) = (f(ii - 1), f(ii), f(ii + 1), f(ii + 2));
        let l0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
        let l1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
        let l2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
        let l3 = (s + 1.0) * s * (s - 1.0) / 6.0;
        l0 * f0 + l1 * f1 + l2 * f2 + l3 * f3
    }
}

const TABLE_LOG2: u32 = 22;

/// Shared table for a temporal bump, built on first use.
pub fn psi_hat_table(spec: &BumpSpec) -> Result<Arc<PsiHatTable>> {
    if spec.kind != BumpKind::Temporal {
        return Err(Error::InvalidParameter(
            "psi_hat is defined for the temporal bump only".into(),
        ));
    }
    type Tables = Mutex<HashMap<(u64, u64), Arc<PsiHatTable>>>;
    static TABLES: OnceLock<Tables> = OnceLock::new();
    let key = (spec.inner_radius.to_bits(), spec.outer_radius.to_bits());
    let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = tables.lock().unwrap();
    Ok(map
        .entry(key)
        .or_insert_with(|| Arc::new(PsiHatTable::build(spec, TABLE_LOG2)))
        .clone())
}

/// Fourier transform of `psi = psi_0^2`, read from the shared table.
pub fn psi_hat(spec: &BumpSpec, xi: f64) -> Result<f64> {
    Ok(psi_hat_table(spec)?.eval(xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bump_shape() {
        let s = BumpSpec::temporal();
        assert_eq!(bump(&s, 0.3), 1.0);
        assert_eq!(bump(&s, -1.0), 1.0);
        assert_eq!(bump(&s, 2.0), 0.0);
        assert_eq!(bump(&s, -7.0), 0.0);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let t = 1.0 + i as f64 * 1e-3;
            let v = bump(&s, t);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev);
            assert_eq!(v, bump(&s, -t));
            prev = v;
        }
        assert_relative_eq!(bump(&s, 1.5), 0.5, epsilon = 1e-15);
        assert!(BumpSpec::new(2.0, 1.0, BumpKind::Spatial).is_err());
        assert!(BumpSpec::new(0.0, 1.0, BumpKind::Spatial).is_err());
    }

    #[test]
    fn bump_derivative_matches_differences() {
        let s = BumpSpec::new(0.5, 1.7, BumpKind::Temporal).unwrap();
        for i in 1..60 {
            let t = 0.5 + 0.02 * i as f64;
            let h = 1e-5;
            let fd = (bump(&s, t + h) - bump(&s, t - h)) / (2.0 * h);
            assert!((fd - bump_derivative(&s, t)).abs() < 1e-7);
            assert_eq!(bump_derivative(&s, -t), -bump_derivative(&s, t));
        }
        assert_eq!(bump_derivative(&s, 0.2), 0.0);
    }

    #[test]
    fn psi_hat_table_agrees_with_direct_quadrature() {
        let s = BumpSpec::temporal();
        let table = psi_hat_table(&s).unwrap();
        assert!(table.step() < 0.01);
        let direct0 = psi_hat_direct(&s, 0.0);
        assert!(direct0 > 2.0 && direct0 < 4.0);
        assert_relative_eq!(table.eval(0.0), direct0, epsilon = 1e-12);
        let mut worst: f64 = 0.0;
        for i in 0..400 {
            let xi = 0.123_456_7 + 0.731 * i as f64 * (1.0 + 0.01 * i as f64);
            let d = (table.eval(xi) - psi_hat_direct(&s, xi)).abs();
            worst = worst.max(d);
            assert_eq!(table.eval(xi), table.eval(-xi));
        }
        assert!(worst <= 1e-8, "worst interpolation error {worst}");
        let max = table.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert_eq!(max, table.values()[0]);
    }

    #[test]
    fn psi_hat_decays_rapidly() {
        let s = BumpSpec::temporal();
        let sup = |tab: &PsiHatTable| {
            (0..=900)
                .map(|i| {
                    let xi = 10.0 + 0.1 * i as f64;
                    tab.eval(xi).abs() * xi.powi(8)
                })
                .fold(0.0f64, f64::max)
        };
        let coarse = PsiHatTable::build(&s, 21);
        let fine = psi_hat_table(&s).unwrap();
        let (a, b) = (sup(&coarse), sup(&fine));
        assert!(a.is_finite() && b.is_finite());
        assert!((a - b).abs() <= 1e-2 * b, "{a} vs {b}");
        assert!(psi_hat(&BumpSpec::spatial(), 1.0).is_err());
    }
}

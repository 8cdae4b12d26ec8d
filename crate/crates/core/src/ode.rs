//! Radial eigenfunction solver.
//!
//! Solves `y'' + (D'/D) y' + kappa y = 0`, `y(0) = 1`, `y'(0) = 0` for the
//! radial Laplacian of a rank-one space. Near the regular singular point at
//! the origin the solution is an even power series in `t`, summed to full
//! precision up to a start radius. From there the equation is integrated by
//! Taylor series steps whose coefficients come from the recurrence of the
//! equation itself, so each step is accurate to round-off and the stored
//! coefficients double as the dense output.

use crate::error::{Error, Result};
use crate::space::SpaceParams;

const TAYLOR_TOL: f64 = 1e-17;
const MAX_ORDER: usize = 90;
const MAX_SERIES: usize = 240;

/// Dense solution of the radial equation on `[0, t_max]`.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    kappa: f64,
    t_start: f64,
    series: Vec<f64>,
    starts: Vec<f64>,
    offsets: Vec<usize>,
    coeffs: Vec<f64>,
    t_max: f64,
}

// coth t = 1/t + sum_j e_j t^(2j+1)
fn coth_laurent(count: usize) -> Vec<f64> {
    let mut e = vec![0.0; count];
    for k in 0..count {
        let mut acc = if k == 0 { 1.0 } else { 0.0 };
        if k >= 1 {
            for i in 0..k {
                acc -= e[i] * e[k - 1 - i];
            }
        }
        e[k] = acc / (2 * k + 3) as f64;
    }
    e
}

impl RadialSolution {
    /// Integrates from the origin to `t_max` with eigenvalue parameter
    /// `kappa = lambda^2 + rho^2`.
    pub fn solve(space: &SpaceParams, kappa: f64, t_max: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "radial solver needs a finite kappa >= 0, got {kappa}"
            )));
        }
        if !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "radial solver needs a finite t_max >= 0, got {t_max}"
            )));
        }
        let m1 = f64::from(space.m1());
        let m2 = f64::from(space.m2());
        let n = f64::from(space.n());

        let mut t_start = 0.5f64.min(2.0 / kappa.sqrt().max(1e-300)).min(t_max.max(1e-300));
        let series = loop {
            match origin_series(m1, m2, n, kappa, t_start) {
                Some(s) => break s,
                None => {
                    t_start *= 0.5;
                    if t_start < 1e-8 {
                        return Err(Error::StepControl { t: t_start });
                    }
                }
            }
        };
        let mut sol = Self {
            kappa,
            t_start,
            series,
            starts: Vec::new(),
            offsets: vec![0],
            coeffs: Vec::new(),
            t_max,
        };
        if t_max <= t_start {
            sol.t_start = t_max;
            return Ok(sol);
        }
        let (mut y, mut dy) = sol.series_value(t_start);
        let mut tau = t_start;
        let h_wave = 2.5 / kappa.sqrt().max(1e-300);
        let mut p = Vec::with_capacity(MAX_ORDER);
        let mut c = Vec::with_capacity(MAX_ORDER);
        let mut g = Vec::with_capacity(MAX_ORDER);
        let mut a = Vec::with_capacity(MAX_ORDER + 2);
        while tau < t_max {
            let mut h = (0.4 * tau).min(h_wave).min(0.5);
            if tau + h > t_max || t_max - (tau + h) < 1e-3 * h {
                h = t_max - tau;
            }
            loop {
                if taylor_step(m1, m2, kappa, tau, h, y, dy, &mut p, &mut c, &mut g, &mut a) {
                    break;
                }
                h *= 0.5;
                if h < 1e-12 {
                    return Err(Error::StepControl { t: tau });
                }
            }
            let (mut y1, mut dy1) = (0.0, 0.0);
            for k in (0..a.len()).rev() {
                y1 = y1 * h + a[k];
                if k >= 1 {
                    dy1 = dy1 * h + k as f64 * a[k];
                }
            }
            sol.starts.push(tau);
            sol.coeffs.extend_from_slice(&a);
            sol.offsets.push(sol.coeffs.len());
            tau = if tau + h >= t_max { t_max } else { tau + h };
            y = y1;
            dy = dy1;
        }
        Ok(sol)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn steps(&self) -> usize {
        self.starts.len()
    }

    fn series_value(&self, t: f64) -> (f64, f64) {
        let x = t * t;
        let mut v = 0.0;
        let mut d = 0.0;
        for k in (0..self.series.len()).rev() {
            v = v * x + self.series[k];
            if k >= 1 {
                d = d * x + 2.0 * k as f64 * self.series[k];
            }
        }
        // d currently holds sum 2k a_k x^(k-1)
        (v, d * t)
    }

    fn segment_of(&self, t: f64) -> usize {
        match self.starts.partition_point(|&s| s <= t) {
            0 => 0,
            i => i - 1,
        }
    }

    /// Value and derivative at `t` in `[0, t_max]`.
    pub fn value_and_derivative(&self, t: f64) -> (f64, f64) {
        let t = t.abs();
        if t <= self.t_start || self.starts.is_empty() {
            return self.series_value(t);
        }
        let i = self.segment_of(t);
        let a = &self.coeffs[self.offsets[i]..self.offsets[i + 1]];
        let s = t - self.starts[i];
        let (mut v, mut d) = (0.0, 0.0);
        for k in (0..a.len()).rev() {
            v = v * s + a[k];
            if k >= 1 {
                d = d * s + k as f64 * a[k];
            }
        }
        (v, d)
    }

    /// Value at `t` in `[0, t_max]`.
    pub fn value(&self, t: f64) -> f64 {
        let t = t.abs();
        if t <= self.t_start || self.starts.is_empty() {
            let x = t * t;
            return self.series.iter().rev().fold(0.0, |v, &c| v * x + c);
        }
        let i = self.segment_of(t);
        let a = &self.coeffs[self.offsets[i]..self.offsets[i + 1]];
        let s = t - self.starts[i];
        a.iter().rev().fold(0.0, |v, &c| v * s + c)
    }

    /// Values at ascending non-negative points, written to `out`.
    pub fn values_sorted(&self, ts: &[f64], out: &mut [f64]) {
        debug_assert_eq!(ts.len(), out.len());
        let mut j = 0;
        let x_end = ts.partition_point(|&t| t <= self.t_start);
        while j < x_end {
            let x = ts[j] * ts[j];
            out[j] = self.series.iter().rev().fold(0.0, |v, &c| v * x + c);
            j += 1;
        }
        if j == ts.len() {
            return;
        }
        let mut seg = self.segment_of(ts[j]);
        let mut s = Vec::new();
        while j < ts.len() {
            while seg + 1 < self.starts.len() && ts[j] >= self.starts[seg + 1] {
                seg += 1;
            }
            let end = if seg + 1 < self.starts.len() {
                let bound = self.starts[seg + 1];
                j + ts[j..].partition_point(|&t| t < bound)
            } else {
                ts.len()
            };
            let a = &self.coeffs[self.offsets[seg]..self.offsets[seg + 1]];
            let tau = self.starts[seg];
            s.clear();
            s.extend(ts[j..end].iter().map(|t| t - tau));
            let acc = &mut out[j..end];
            let top = a[a.len() - 1];
            acc.iter_mut().for_each(|v| *v = top);
            for &ck in a[..a.len() - 1].iter().rev() {
                for (v, &sv) in acc.iter_mut().zip(&s) {
                    *v = *v * sv + ck;
                }
            }
            j = end;
        }
    }
}

// Even power series sum a_k t^(2k) about the origin; None if it fails to
// converge to round-off at t.
fn origin_series(m1: f64, m2: f64, n: f64, kappa: f64, t: f64) -> Option<Vec<f64>> {
    let e = coth_laurent(MAX_SERIES);
    let d: Vec<f64> = e
        .iter()
        .enumerate()
        .map(|(j, ej)| m1 * ej + 2.0 * m2 * ej * 2f64.powi(2 * j as i32 + 1))
        .collect();
    let x = t * t;
    let mut a = vec![1.0];
    let mut pow = 1.0;
    let mut small = 0;
    for k in 0..MAX_SERIES - 1 {
        let mut acc = kappa * a[k];
        for i in 1..=k {
            acc += 2.0 * i as f64 * d[k - i] * a[i];
        }
        let next = -acc / ((2 * k + 2) as f64 * ((2 * k) as f64 + n));
        a.push(next);
        pow *= x;
        if (next * pow).abs() <= TAYLOR_TOL {
            small += 1;
            if small >= 3 {
                return Some(a);
            }
        } else {
            small = 0;
        }
    }
    None
}

// Fills `a` with Taylor coefficients of the solution about tau; returns false
// if the series does not reach round-off within MAX_ORDER terms.
#[allow(clippy::too_many_arguments)]
fn taylor_step(
    m1: f64,
    m2: f64,
    kappa: f64,
    tau: f64,
    h: f64,
    y: f64,
    dy: f64,
    p: &mut Vec<f64>,
    c: &mut Vec<f64>,
    g: &mut Vec<f64>,
    a: &mut Vec<f64>,
) -> bool {
    let scale = y.abs() + h * dy.abs();
    a.clear();
    a.push(y);
    a.push(dy);
    if scale == 0.0 {
        return true;
    }
    // coefficients of P(tau + s) = m1 coth(tau + s) + 2 m2 coth(2 tau + 2 s)
    p.clear();
    c.clear();
    g.clear();
    let sh = tau.sinh();
    c.push(1.0 / tau.tanh());
    c.push(-1.0 / (sh * sh));
    let with_g = m2 != 0.0;
    if with_g {
        let sh2 = (2.0 * tau).sinh();
        g.push(1.0 / (2.0 * tau).tanh());
        g.push(-2.0 / (sh2 * sh2));
    }
    let p_scale = m1 * c[0].abs() + 2.0 * m2 * g.first().map_or(0.0, |v| v.abs());
    let mut p_done = false;
    let mut hk = h;
    let mut small = 0;
    for k in 0..MAX_ORDER {
        // make sure p_k is available
        while !p_done && p.len() <= k {
            let j = p.len();
            if j >= c.len() {
                let kk = j - 1;
                let mut s = 0.0;
                for i in 0..=kk {
                    s += c[i] * c[kk - i];
                }
                c.push(-s / j as f64);
                if with_g {
                    let mut s = 0.0;
                    for i in 0..=kk {
                        s += g[i] * g[kk - i];
                    }
                    g.push(-2.0 * s / j as f64);
                }
            }
            let pj = m1 * c[j] + if with_g { 2.0 * m2 * g[j] } else { 0.0 };
            p.push(pj);
            if j >= 2 && (pj * h.powi(j as i32)).abs() <= 1e-19 * p_scale {
                p_done = true;
            }
        }
        let mut acc = kappa * a[k];
        let jmax = k.min(p.len() - 1);
        for j in 0..=jmax {
            acc += p[j] * (k - j + 1) as f64 * a[k - j + 1];
        }
        let next = -acc / ((k + 2) as f64 * (k + 1) as f64);
        a.push(next);
        hk *= h;
        // hk = h^(k+2)
        let term = (next * hk).abs();
        if term <= TAYLOR_TOL * scale {
            small += 1;
            if small >= 2 && k >= 2 {
                return true;
            }
        } else {
            small = 0;
        }
    }
    false
}

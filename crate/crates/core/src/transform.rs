//! Spherical transform, its inverse, Plancherel and Sobolev norms, the
//! calibration of the transform constants and the test profiles.
//!
//! Conventions: `f_hat(lambda) = int_0^inf f(t) phi_lambda(t) D(t) dt` and
//! `f(t) = int_0^inf f_hat(lambda) phi_lambda(t) |c(lambda)|^-2 dlambda`. Both
//! outer constants are 1; the whole normalization sits in the constant `N` of
//! the c-function, which [`calibrate_normalization`] fixes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::RadialSolution;
use crate::quadrature::QuadGrid;
use crate::space::{Normalization, SpaceParams};
use crate::specfun::cfunc::{unit_density, JacobiParams};

/// Relative size below which a profile counts as decayed at the grid end.
pub const DECAY_TOL: f64 = 1e-12;

// Trailing integrand contributions below this fraction of the peak are skipped.
const TRIM_TOL: f64 = 1e-18;

// Nodes per work unit; fixed so that reductions do not depend on the thread count.
const CHUNK: usize = 64;

/// Default radial grid: `[0, 6]` in 2048 panels.
pub fn default_radial_grid() -> QuadGrid {
    QuadGrid::from_origin(6.0, 2048).expect("valid default grid")
}

/// Default spectral grid: `[0, 256]` in 4096 panels.
pub fn default_spectral_grid() -> QuadGrid {
    QuadGrid::from_origin(256.0, 4096).expect("valid default grid")
}

/// A radial function sampled on a quadrature grid in the geodesic radius.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    grid: QuadGrid,
    values: Vec<f64>,
    space: SpaceParams,
}

impl RadialProfile {
    pub fn new(space: &SpaceParams, grid: QuadGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if grid.len() < 8 {
            return Err(Error::InvalidParameter("a radial profile needs at least 8 nodes".into()));
        }
        if grid.lower() != 0.0 || grid.nodes()[0] != 0.0 {
            return Err(Error::InvalidParameter("radial grids start at the origin".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("radial profile has non-finite values".into()));
        }
        Ok(Self {
            grid,
            values,
            space: space.clone(),
        })
    }

    pub fn from_fn(space: &SpaceParams, grid: QuadGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self::new(space, grid, values)
    }

    pub fn grid(&self) -> &QuadGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn space(&self) -> &SpaceParams {
        &self.space
    }

    /// `(int |f|^2 D dt)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        radial_l2(&self.space, &self.grid, self.values.iter().map(|v| v * v))
    }
}

/// A complex radial function, e.g. `S_t f`.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: QuadGrid,
    values: Vec<Complex64>,
    space: SpaceParams,
}

impl RadialField {
    pub fn grid(&self) -> &QuadGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn space(&self) -> &SpaceParams {
        &self.space
    }

    pub fn l2_norm(&self) -> f64 {
        radial_l2(&self.space, &self.grid, self.values.iter().map(|v| v.norm_sqr()))
    }

    pub fn real_part(&self) -> Result<RadialProfile> {
        RadialProfile::new(
            &self.space,
            self.grid.clone(),
            self.values.iter().map(|v| v.re).collect(),
        )
    }
}

/// `(int |v|^2 D dt)^(1/2)` for complex samples on a radial grid.
pub fn radial_l2_norm(space: &SpaceParams, grid: &QuadGrid, values: &[Complex64]) -> f64 {
    radial_l2(space, grid, values.iter().map(|v| v.norm_sqr()))
}

pub(crate) fn radial_l2(space: &SpaceParams, grid: &QuadGrid, sq: impl Iterator<Item = f64>) -> f64 {
    grid.nodes()
        .iter()
        .zip(grid.weights())
        .zip(sq)
        .map(|((&t, &w), v)| w * v * space.density_unchecked(t))
        .sum::<f64>()
        .sqrt()
}

/// A spectral-side function sampled on a quadrature grid in `lambda >= 0`.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    grid: QuadGrid,
    values: Vec<Complex64>,
    space: SpaceParams,
}

impl SpectralProfile {
    pub fn new(space: &SpaceParams, grid: QuadGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if grid.lower() < 0.0 {
            return Err(Error::InvalidParameter("spectral grids live in lambda >= 0".into()));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidParameter("spectral profile has non-finite values".into()));
        }
        Ok(Self {
            grid,
            values,
            space: space.clone(),
        })
    }

    pub fn from_fn(space: &SpaceParams, grid: QuadGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid
            .nodes()
            .iter()
            .map(|&l| Complex64::new(f(l), 0.0))
            .collect();
        Self::new(space, grid, values)
    }

    pub fn grid(&self) -> &QuadGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn space(&self) -> &SpaceParams {
        &self.space
    }

    /// Same grid, values multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
            space: self.space.clone(),
        }
    }

    #[cfg(test)]
    pub(crate) fn with_space(mut self, space: &SpaceParams) -> Self {
        self.space = space.clone();
        self
    }
}

fn relative_tail(grid: &QuadGrid, mags: &[f64]) -> f64 {
    let peak = mags.iter().fold(0.0f64, |m, v| m.max(*v));
    if peak == 0.0 {
        return 0.0;
    }
    let last = grid.panel_nodes(grid.panel_count() - 1);
    mags[last].iter().fold(0.0f64, |m, v| m.max(*v)) / peak
}

pub(crate) fn trailing_cut(mags: &[f64]) -> usize {
    let peak = mags.iter().fold(0.0f64, |m, v| m.max(*v));
    if peak == 0.0 {
        return 0;
    }
    mags.iter()
        .rposition(|v| *v > TRIM_TOL * peak)
        .map_or(0, |i| i + 1)
}

pub(crate) fn check_resolution(radial: &QuadGrid, spectral: &QuadGrid) -> Result<()> {
    let rw = radial.max_panel_width();
    let sw = spectral.max_panel_width();
    let need_r = (PI / (4.0 * spectral.upper())).min(0.25);
    let need_s = (PI / (4.0 * radial.upper())).min(0.25);
    if rw > need_r * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "radial panels of width {rw:.4e} do not resolve lambda up to {} (need <= {need_r:.4e})",
            spectral.upper()
        )));
    }
    if sw > need_s * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "spectral panels of width {sw:.4e} do not resolve t up to {} (need <= {need_s:.4e})",
            radial.upper()
        )));
    }
    Ok(())
}

/// Spherical transform `f_hat(lambda) = int f phi_lambda D dt` on `lambdas`.
pub fn forward(f: &RadialProfile, lambdas: &QuadGrid) -> Result<SpectralProfile> {
    Ok(forward_many(std::slice::from_ref(f), lambdas)?.pop().unwrap())
}

/// [`forward`] for several profiles on one radial grid, sharing the spherical functions.
pub fn forward_many(fs: &[RadialProfile], lambdas: &QuadGrid) -> Result<Vec<SpectralProfile>> {
    let Some(first) = fs.first() else {
        return Ok(Vec::new());
    };
    let space = first.space();
    let grid = first.grid();
    if fs.iter().any(|f| f.grid() != grid || f.space() != space) {
        return Err(Error::InvalidParameter("profiles must share grid and space".into()));
    }
    check_resolution(grid, lambdas)?;
    for f in fs {
        let mags: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
        let tail = relative_tail(grid, &mags);
        if tail > DECAY_TOL {
            return Err(Error::SupportTruncation { tail });
        }
    }
    let nodes = grid.nodes();
    let weighted: Vec<Vec<f64>> = fs
        .iter()
        .map(|f| {
            nodes
                .iter()
                .zip(grid.weights())
                .zip(f.values())
                .map(|((&t, &w), &v)| w * v * space.density_unchecked(t))
                .collect()
        })
        .collect();
    let cut = weighted
        .iter()
        .map(|w| trailing_cut(&w.iter().map(|v| v.abs()).collect::<Vec<_>>()))
        .max()
        .unwrap_or(0);
    let ts = &nodes[..cut];
    let t_end = ts.last().copied().unwrap_or(0.0);
    let rho2 = space.rho() * space.rho();
    let rows: Vec<Result<Vec<f64>>> = lambdas
        .nodes()
        .par_iter()
        .map_init(
            || vec![0.0; ts.len()],
            |row, &l| {
                let sol = RadialSolution::solve(space, l * l + rho2, t_end)?;
                sol.values_sorted(ts, row);
                Ok(weighted
                    .iter()
                    .map(|wf| row.iter().zip(&wf[..cut]).map(|(p, w)| p * w).sum())
                    .collect())
            },
        )
        .collect();
    let mut values = vec![Vec::with_capacity(lambdas.len()); fs.len()];
    for r in rows {
        for (v, x) in values.iter_mut().zip(r?) {
            v.push(Complex64::new(x, 0.0));
        }
    }
    values
        .into_iter()
        .map(|v| SpectralProfile::new(space, lambdas.clone(), v))
        .collect()
}

/// Plancherel density on grid nodes, zero at `lambda = 0`.
pub(crate) fn density_on(space: &SpaceParams, lambdas: &[f64]) -> Result<Vec<f64>> {
    let norm = space.require_normalization()?;
    let jac = JacobiParams::of(space);
    let k = 1.0 / (norm.c_norm * norm.c_norm);
    Ok(lambdas.iter().map(|&l| unit_density(&jac, l) * k).collect())
}

/// Checks decay of a spectral profile at the end of its grid.
pub(crate) fn check_spectral_decay(fh: &SpectralProfile) -> Result<()> {
    let mags: Vec<f64> = fh.values().iter().map(|v| v.norm()).collect();
    let tail = relative_tail(fh.grid(), &mags);
    if tail > DECAY_TOL {
        return Err(Error::SpectralTruncation { tail });
    }
    Ok(())
}

/// `sum_i coef_i phi_{lambda_i}(x_j)` for each coefficient set and ascending `xs`,
/// in one pass over `lambda` that skips trailing negligible coefficients.
pub(crate) fn synthesize_many(
    space: &SpaceParams,
    lambdas: &[f64],
    coefs: &[Vec<Complex64>],
    xs: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    debug_assert!(xs.windows(2).all(|w| w[0] <= w[1]));
    if xs.is_empty() {
        return Ok(vec![Vec::new(); coefs.len()]);
    }
    let zero = Complex64::new(0.0, 0.0);
    let cut = coefs
        .iter()
        .map(|c| trailing_cut(&c.iter().map(|v| v.norm()).collect::<Vec<_>>()))
        .max()
        .unwrap_or(0);
    let x_end = xs.last().copied().unwrap_or(0.0);
    let rho2 = space.rho() * space.rho();
    let nx = xs.len();
    let idx: Vec<usize> = (0..cut).collect();
    let partial: Vec<Result<Vec<Complex64>>> = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![zero; coefs.len() * nx];
            let mut row = vec![0.0; nx];
            for &i in chunk {
                if coefs.iter().all(|c| c[i] == zero) {
                    continue;
                }
                let l = lambdas[i];
                let sol = RadialSolution::solve(space, l * l + rho2, x_end)?;
                sol.values_sorted(xs, &mut row);
                for (k, c) in coefs.iter().enumerate() {
                    let c = c[i];
                    if c == zero {
                        continue;
                    }
                    for (a, p) in acc[k * nx..(k + 1) * nx].iter_mut().zip(&row) {
                        *a += c * *p;
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut out = vec![zero; coefs.len() * nx];
    for part in partial {
        for (o, p) in out.iter_mut().zip(part?) {
            *o += p;
        }
    }
    Ok(out.chunks(nx).map(|c| c.to_vec()).collect())
}

/// Inverse transform `int f_hat phi_lambda(t) |c|^-2 dlambda` sampled on `radii`.
///
/// Complex spectra give complex results; see [`inverse`] for the real part.
pub fn inverse_field(fh: &SpectralProfile, radii: &QuadGrid) -> Result<RadialField> {
    Ok(inverse_fields(std::slice::from_ref(fh), radii)?.pop().unwrap())
}

/// [`inverse_field`] for several spectra on one grid.
pub fn inverse_fields(fhs: &[SpectralProfile], radii: &QuadGrid) -> Result<Vec<RadialField>> {
    let Some(first) = fhs.first() else {
        return Ok(Vec::new());
    };
    let space = first.space();
    let grid = first.grid();
    if fhs.iter().any(|f| f.grid() != grid || f.space() != space) {
        return Err(Error::InvalidParameter("spectra must share grid and space".into()));
    }
    check_resolution(radii, grid)?;
    let dens = density_on(space, grid.nodes())?;
    let mut coefs = Vec::with_capacity(fhs.len());
    for fh in fhs {
        check_spectral_decay(fh)?;
        coefs.push(
            fh.values()
                .iter()
                .zip(grid.weights())
                .zip(&dens)
                .map(|((v, w), d)| v * (w * d))
                .collect::<Vec<_>>(),
        );
    }
    let values = synthesize_many(space, grid.nodes(), &coefs, radii.nodes())?;
    Ok(values
        .into_iter()
        .map(|v| RadialField {
            grid: radii.clone(),
            values: v,
            space: space.clone(),
        })
        .collect())
}

/// [`inverse`] for several real spectra on one grid.
pub fn inverse_many(fhs: &[SpectralProfile], radii: &QuadGrid) -> Result<Vec<RadialProfile>> {
    inverse_fields(fhs, radii)?.iter().map(RadialField::real_part).collect()
}

/// Inverse transform of a real spectrum.
pub fn inverse(fh: &SpectralProfile, radii: &QuadGrid) -> Result<RadialProfile> {
    inverse_field(fh, radii)?.real_part()
}

pub(crate) fn field_from_parts(space: &SpaceParams, grid: &QuadGrid, values: Vec<Complex64>) -> RadialField {
    RadialField {
        grid: grid.clone(),
        values,
        space: space.clone(),
    }
}

/// `(int (lambda^2 + rho^2)^s |f_hat|^2 |c|^-2 dlambda)^(1/2)`.
///
/// Fails with [`Error::Divergence`] when the last sixteenth of the grid
/// carries more than 1% of the integral.
pub fn sobolev_norm(fh: &SpectralProfile, s: f64) -> Result<f64> {
    let space = fh.space();
    let nodes = fh.grid().nodes();
    let dens = density_on(space, nodes)?;
    let rho2 = space.rho() * space.rho();
    let hi = fh.grid().upper();
    let lo = fh.grid().lower();
    let tail_start = hi - (hi - lo) / 16.0;
    let mut total = 0.0;
    let mut tail = 0.0;
    for (((&l, &w), v), d) in nodes.iter().zip(fh.grid().weights()).zip(fh.values()).zip(&dens) {
        let term = w * (l * l + rho2).powf(s) * v.norm_sqr() * d;
        total += term;
        if l >= tail_start {
            tail += term;
        }
    }
    if total > 0.0 && tail > 0.01 * total {
        return Err(Error::Divergence {
            tail_fraction: tail / total,
        });
    }
    Ok(total.sqrt())
}

/// Relative `L^2(D dt)` distance of two profiles on the same grid.
pub fn relative_l2_error(f: &RadialProfile, g: &RadialProfile) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::InvalidParameter("profiles live on different grids".into()));
    }
    let diff = radial_l2(
        f.space(),
        f.grid(),
        f.values().iter().zip(g.values()).map(|(a, b)| (a - b) * (a - b)),
    );
    Ok(diff / f.l2_norm())
}

/// `c`-function constant for real hyperbolic 3-space in this convention.
pub const H3_C_NORM: f64 = PI / std::f64::consts::SQRT_2;

fn reference_bump(t: f64) -> f64 {
    (-4.0 * t * t).exp()
}

fn calibration_grids() -> (QuadGrid, QuadGrid) {
    let radial = QuadGrid::from_origin(6.0, 320).expect("valid grid");
    let spectral = QuadGrid::from_origin(40.0, 320).expect("valid grid");
    (radial, spectral)
}

/// Fixes the constants of the transform pair and returns the calibrated space.
///
/// For `(m1, m2) = (2, 0)` the constant follows from the closed form of the
/// spherical functions. Otherwise it is chosen so that the Plancherel identity
/// holds for the bump `exp(-4 t^2)`. In both cases the round trip of the bump
/// is checked; a residual above `1e-3` is a calibration failure.
pub fn calibrate_normalization(space: &SpaceParams) -> Result<SpaceParams> {
    let (radial, spectral) = calibration_grids();
    let f = RadialProfile::from_fn(space, radial.clone(), reference_bump)?;
    let c_norm = if (space.m1(), space.m2()) == (2, 0) {
        H3_C_NORM
    } else {
        let fh = forward(&f, &spectral)?;
        let jac = JacobiParams::of(space);
        let spec_sq: f64 = spectral
            .nodes()
            .iter()
            .zip(spectral.weights())
            .zip(fh.values())
            .map(|((&l, &w), v)| w * v.norm_sqr() * unit_density(&jac, l))
            .sum();
        let l2 = f.l2_norm();
        (spec_sq / (l2 * l2)).sqrt()
    };
    let calibrated = space.with_normalization(Normalization {
        forward: 1.0,
        inverse: 1.0,
        c_norm,
    });
    let f = RadialProfile::from_fn(&calibrated, radial.clone(), reference_bump)?;
    let fh = forward(&f, &spectral)?;
    let back = inverse(&fh, &radial)?;
    let residual = relative_l2_error(&f, &back)?;
    if !(residual <= 1e-3) {
        return Err(Error::Calibration { residual });
    }
    Ok(calibrated)
}

/// Decay rate `kappa` of the family `(kappa^2 + lambda^2)^(-q/2) exp(-(lambda/cutoff)^8)`.
pub const FAMILY_KAPPA: f64 = 5.0;

/// Test profiles, defined on the spectral side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    /// `(kappa^2 + lambda^2)^(-q/2) exp(-(lambda/cutoff)^8)`.
    Family { q: f64, cutoff: f64 },
    /// `exp(-(lambda^2 + rho^2) tau)`.
    Heat { tau: f64 },
}

impl ProfileSpec {
    pub fn spectrum(&self, space: &SpaceParams, lambda: f64) -> f64 {
        match *self {
            ProfileSpec::Family { q, cutoff } => {
                (FAMILY_KAPPA * FAMILY_KAPPA + lambda * lambda).powf(-0.5 * q)
                    * (-(lambda / cutoff).powi(8)).exp()
            }
            ProfileSpec::Heat { tau } => {
                (-(lambda * lambda + space.rho() * space.rho()) * tau).exp()
            }
        }
    }

    /// Largest `sigma` with the uncut profile in `H^sigma`: `q - n/2`.
    pub fn regularity(&self, space: &SpaceParams) -> f64 {
        match *self {
            ProfileSpec::Family { q, .. } => q - 0.5 * f64::from(space.n()),
            ProfileSpec::Heat { .. } => f64::INFINITY,
        }
    }

    /// Point beyond which the spectrum is below `1e-16` of its size at 0.
    pub fn spectral_extent(&self, space: &SpaceParams) -> f64 {
        match *self {
            ProfileSpec::Family { cutoff, .. } => cutoff * (16.0 * 10f64.ln()).powf(0.125),
            ProfileSpec::Heat { tau } => {
                let _ = space;
                (16.0 * 10f64.ln() / tau).sqrt()
            }
        }
    }

    pub fn id(&self) -> String {
        match *self {
            ProfileSpec::Family { q, cutoff } => format!("q={q},cut={cutoff}"),
            ProfileSpec::Heat { tau } => format!("heat,tau={tau}"),
        }
    }

    /// Parses `heat`, `heat,tau=1.5`, `q=2.1` or `q=2.1,cut=16`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidParameter(format!(
                "cannot parse profile '{text}' (expected heat[,tau=T] or q=Q[,cut=C])"
            ))
        };
        let mut parts = text.split(',').map(str::trim);
        let head = parts.next().ok_or_else(bad)?;
        let kv = |name: &str, default: f64, rest: &mut dyn Iterator<Item = &str>| -> Result<f64> {
            match rest.next() {
                None => Ok(default),
                Some(p) => {
                    let (k, v) = p.split_once('=').ok_or_else(bad)?;
                    if k.trim() != name {
                        return Err(bad());
                    }
                    v.trim().parse::<f64>().map_err(|_| bad())
                }
            }
        };
        let spec = if head == "heat" {
            ProfileSpec::Heat {
                tau: kv("tau", 1.0, &mut parts)?,
            }
        } else if let Some(q) = head.strip_prefix("q=") {
            let q = q.trim().parse::<f64>().map_err(|_| bad())?;
            ProfileSpec::Family {
                q,
                cutoff: kv("cut", 16.0, &mut parts)?,
            }
        } else {
            return Err(bad());
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        match spec {
            ProfileSpec::Heat { tau } if !(tau > 0.0 && tau.is_finite()) => Err(bad()),
            ProfileSpec::Family { q, cutoff } if !(q > 0.0 && cutoff > 0.0 && q.is_finite() && cutoff.is_finite()) => {
                Err(bad())
            }
            s => Ok(s),
        }
    }

    /// Samples the spectrum on `grid`.
    pub fn sample(&self, space: &SpaceParams, grid: &QuadGrid) -> Result<SpectralProfile> {
        SpectralProfile::from_fn(space, grid.clone(), |l| self.spectrum(space, l))
    }
}

/// The default family: `q = n/2 + {0.7, 1.1, 1.5, 2.5}` and cutoffs `{16, 32, 64}`.
pub fn default_family(space: &SpaceParams) -> Vec<ProfileSpec> {
    let half_n = 0.5 * f64::from(space.n());
    let mut out = Vec::with_capacity(12);
    for dq in [0.7, 1.1, 1.5, 2.5] {
        for cutoff in [16.0, 32.0, 64.0] {
            out.push(ProfileSpec::Family {
                q: half_n + dq,
                cutoff,
            });
        }
    }
    out
}

/// Spectral grid `[0, hi]` whose panels resolve radii up to `radius`.
pub fn spectral_grid_for(hi: f64, radius: f64) -> Result<QuadGrid> {
    QuadGrid::from_origin(hi, crate::quadrature::panels_for(hi, radius))
}

/// Radial grid `[0, hi]` whose panels resolve frequencies up to `lambda_max`.
pub fn radial_grid_for(hi: f64, lambda_max: f64) -> Result<QuadGrid> {
    QuadGrid::from_origin(hi, crate::quadrature::panels_for(hi, lambda_max))
}

//! The kernel `K(lambda, eta)` of the local smoothing estimate, its row and
//! column integrals against the Plancherel measure, and their split into the
//! three `u`-ranges `[rho^a, (3 + rho^2)^(a/2)]`, `((3 + rho^2)^(a/2), 3b/2]`
//! and `(3b/2, inf)` with `u = (lambda^2 + rho^2)^(a/2)`, `b = (eta^2 + rho^2)^(a/2)`.
//!
//! `K(lambda, eta) = (rho^2 + |lambda|)^s (rho^2 + |eta|)^s
//!   int alpha_0^2 phi_lambda phi_eta D dx  psi_hat(b - u)`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::{bump, psi_hat_table, BumpSpec, PsiHatTable};
use crate::error::{Error, Result};
use crate::ode::RadialSolution;
use crate::quadrature::{panels_for, ChebyshevPieces, QuadGrid};
use crate::schroedinger::{check_order, frequency};
use crate::space::SpaceParams;
use crate::transform::density_on;
use std::sync::Arc;

/// Half-width in `u` of the finely resolved band around `u = b`.
pub const BAND: f64 = 20.0;
/// Half-width in `u` inside which the kernel is integrated; beyond it only a bound is summed.
pub const NEAR: f64 = 200.0;

const PIECE_WIDTH: f64 = 2.0;
// resolves the transition of the spatial cutoff
const MIN_PANELS: usize = 128;
const PIECE_ORDER: usize = 16;

fn weight_grid(max_freq: f64) -> QuadGrid {
    let outer = BumpSpec::spatial().outer_radius;
    QuadGrid::uniform(0.0, outer, panels_for(outer, max_freq).max(MIN_PANELS), false).expect("valid grid")
}

fn weighted_measure(space: &SpaceParams, grid: &QuadGrid) -> Vec<f64> {
    let alpha = BumpSpec::spatial();
    grid.nodes()
        .iter()
        .zip(grid.weights())
        .map(|(&x, &w)| {
            let b = bump(&alpha, x);
            w * b * b * space.density_unchecked(x)
        })
        .collect()
}

fn phi_row(space: &SpaceParams, lambda: f64, xs: &[f64]) -> Result<Vec<f64>> {
    let rho = space.rho();
    let sol = RadialSolution::solve(space, lambda * lambda + rho * rho, *xs.last().unwrap())?;
    let mut row = vec![0.0; xs.len()];
    sol.values_sorted(xs, &mut row);
    Ok(row)
}

/// `int alpha_0(x)^2 phi_lambda(x) phi_eta(x) D(x) dx` over the support of `alpha_0`.
pub fn cross_integral(space: &SpaceParams, lambda: f64, eta: f64) -> Result<f64> {
    if !(lambda.is_finite() && eta.is_finite()) {
        return Err(Error::InvalidParameter("spectral parameters must be finite".into()));
    }
    let (x, y) = if lambda.abs() <= eta.abs() {
        (lambda.abs(), eta.abs())
    } else {
        (eta.abs(), lambda.abs())
    };
    let grid = weight_grid(x + y);
    let m = weighted_measure(space, &grid);
    let p = phi_row(space, x, grid.nodes())?;
    let q = phi_row(space, y, grid.nodes())?;
    Ok(m.iter().zip(&p).zip(&q).map(|((m, a), b)| m * a * b).sum())
}

fn check_exponents(s: f64, a: f64) -> Result<()> {
    check_order(a)?;
    if !s.is_finite() {
        return Err(Error::InvalidParameter(format!("weight exponent must be finite, got {s}")));
    }
    Ok(())
}

/// `K(lambda, eta)` straight from [`cross_integral`] and the tabulated `psi_hat`.
pub fn kernel_entry(space: &SpaceParams, lambda: f64, eta: f64, s: f64, a: f64) -> Result<f64> {
    check_exponents(s, a)?;
    let psi = psi_hat_table(&BumpSpec::temporal())?;
    let rho2 = space.rho() * space.rho();
    let ph = psi.eval(frequency(space, eta, a) - frequency(space, lambda, a));
    if ph == 0.0 {
        return Ok(0.0);
    }
    let w = (rho2 + lambda.abs()).powf(s) * (rho2 + eta.abs()).powf(s);
    Ok(w * cross_integral(space, lambda, eta)? * ph)
}

/// `s = (a - 1) / 2`.
pub fn critical_exponent(a: f64) -> f64 {
    0.5 * (a - 1.0)
}

/// Piecewise Chebyshev interpolant of the cross integral on `[0, lambda_cut]^2`,
/// kept only on the blocks within `NEAR` of the diagonal `u = b`.
#[derive(Debug, Clone)]
struct CrossInterpolator {
    pieces: ChebyshevPieces,
    blocks: HashMap<(usize, usize), Vec<f64>>,
}

impl CrossInterpolator {
    fn build(space: &SpaceParams, a: f64, lambda_cut: f64) -> Result<Self> {
        let pieces = ChebyshevPieces::new(0.0, lambda_cut, PIECE_WIDTH, PIECE_ORDER);
        let np = pieces.pieces();
        let w = lambda_cut / np as f64;
        let lo = |p: usize| p as f64 * w;
        let hi = |p: usize| (p + 1) as f64 * w;
        let u = |l: f64| frequency(space, l, a);
        let reach: Vec<usize> = (0..np)
            .map(|p| {
                let mut q = p + 1;
                while q < np && u(lo(q)) - u(hi(p)) <= NEAR {
                    q += 1;
                }
                q.min(np - 1)
            })
            .collect();
        let grid = weight_grid(2.0 * lambda_cut);
        let xs = grid.nodes();
        let m = weighted_measure(space, &grid);
        let mut rows: HashMap<usize, Vec<f64>> = HashMap::new();
        let mut blocks = HashMap::new();
        let n = PIECE_ORDER;
        for p in 0..np {
            rows.retain(|&k, _| k >= p);
            for q in p..=reach[p] {
                if !rows.contains_key(&q) {
                    let nodes = pieces.piece_nodes(q);
                    let r = nodes
                        .par_iter()
                        .map(|&l| phi_row(space, l, xs))
                        .collect::<Result<Vec<_>>>()?;
                    rows.insert(q, r.concat());
                }
            }
            let weighted: Vec<f64> = rows[&p]
                .chunks(xs.len())
                .flat_map(|r| r.iter().zip(&m).map(|(a, b)| a * b).collect::<Vec<_>>())
                .collect();
            let computed: Vec<((usize, usize), Vec<f64>)> = (p..=reach[p])
                .into_par_iter()
                .map(|q| {
                    let rq = &rows[&q];
                    let mut c = vec![0.0; n * n];
                    for i in 0..n {
                        let wi = &weighted[i * xs.len()..(i + 1) * xs.len()];
                        for j in 0..n {
                            let qj = &rq[j * xs.len()..(j + 1) * xs.len()];
                            c[i * n + j] = wi.iter().zip(qj).map(|(a, b)| a * b).sum();
                        }
                    }
                    ((p, q), c)
                })
                .collect();
            blocks.extend(computed);
        }
        Ok(Self { pieces, blocks })
    }

    /// Interpolated value for `x <= y`, or `None` outside the stored blocks.
    fn eval_ordered(&self, x: f64, y: f64) -> Option<f64> {
        if y > self.pieces.hi() || x < 0.0 {
            return None;
        }
        let mut wx = [0.0; PIECE_ORDER];
        let mut wy = [0.0; PIECE_ORDER];
        let p = self.pieces.weights_at(x, &mut wx);
        let q = self.pieces.weights_at(y, &mut wy);
        let c = self.blocks.get(&(p, q))?;
        let mut acc = 0.0;
        for i in 0..PIECE_ORDER {
            let row = &c[i * PIECE_ORDER..(i + 1) * PIECE_ORDER];
            acc += wx[i] * row.iter().zip(&wy).map(|(a, b)| a * b).sum::<f64>();
        }
        Some(acc)
    }
}

/// `K` with the cross integral interpolated on `[0, lambda_cut]`.
#[derive(Debug, Clone)]
pub struct SchurKernel {
    space: SpaceParams,
    s: f64,
    a: f64,
    lambda_cut: f64,
    cross: CrossInterpolator,
    psi: Arc<PsiHatTable>,
    alpha_mass: f64,
}

/// Row integral of `|K|` and its three pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowIntegral {
    /// The fixed spectral parameter.
    pub eta: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub total: f64,
    /// Upper bound for the part with `|u - b| > NEAR`, included in `total`.
    pub far_bound: f64,
    /// The band around `u = b` is clipped by the cutoff, or the far part exceeds 1%.
    pub truncated: bool,
}

impl SchurKernel {
    pub fn new(space: &SpaceParams, s: f64, a: f64, lambda_cut: f64) -> Result<Self> {
        check_exponents(s, a)?;
        space.require_normalization()?;
        if !(lambda_cut >= 4.0 && lambda_cut.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda cutoff must be at least 4, got {lambda_cut}"
            )));
        }
        let grid = weight_grid(1.0);
        let alpha_mass = weighted_measure(space, &grid).iter().sum();
        Ok(Self {
            space: space.clone(),
            s,
            a,
            lambda_cut,
            cross: CrossInterpolator::build(space, a, lambda_cut)?,
            psi: psi_hat_table(&BumpSpec::temporal())?,
            alpha_mass,
        })
    }

    pub fn space(&self) -> &SpaceParams {
        &self.space
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn order(&self) -> f64 {
        self.a
    }

    pub fn lambda_cut(&self) -> f64 {
        self.lambda_cut
    }

    /// `u(lambda) = (lambda^2 + rho^2)^(a/2)`.
    pub fn u(&self, lambda: f64) -> f64 {
        frequency(&self.space, lambda, self.a)
    }

    /// Inverse of [`Self::u`] for `u >= rho^a`.
    pub fn lambda_of(&self, u: f64) -> f64 {
        let r2 = self.space.rho() * self.space.rho();
        (u.powf(2.0 / self.a) - r2).max(0.0).sqrt()
    }

    fn weight(&self, lambda: f64) -> f64 {
        (self.space.rho() * self.space.rho() + lambda.abs()).powf(self.s)
    }

    /// Interpolated cross integral; symmetric in its arguments bit for bit.
    pub fn cross(&self, lambda: f64, eta: f64) -> Result<f64> {
        let (x, y) = if lambda.abs() <= eta.abs() {
            (lambda.abs(), eta.abs())
        } else {
            (eta.abs(), lambda.abs())
        };
        match self.cross.eval_ordered(x, y) {
            Some(v) => Ok(v),
            None => cross_integral(&self.space, x, y),
        }
    }

    pub fn entry(&self, lambda: f64, eta: f64) -> Result<f64> {
        let ph = self.psi.eval(self.u(eta) - self.u(lambda));
        if ph == 0.0 {
            return Ok(0.0);
        }
        Ok(self.weight(lambda) * self.weight(eta) * self.cross(lambda, eta)? * ph)
    }

    /// Panel edges in `lambda` for a line through `b = u(fixed)`.
    fn line_edges(&self, fixed: f64, density: f64) -> Vec<f64> {
        let b = self.u(fixed);
        let u0 = self.u(0.0);
        let u_cut = self.u(self.lambda_cut);
        let mut edges = vec![0.0, self.lambda_cut];
        let coarse = 0.25 / density;
        let n = (self.lambda_cut / coarse).round() as usize;
        edges.extend((1..n).map(|i| i as f64 * coarse));
        let mut push_u = |u: f64| {
            if u > u0 && u < u_cut {
                edges.push(self.lambda_of(u));
            }
        };
        let fine = 0.5 / density;
        let nf = (BAND / fine).round() as i64;
        for k in -nf..=nf {
            push_u(b + k as f64 * fine);
        }
        let mid = 1.0 / density;
        let nm = ((NEAR - BAND) / mid).round() as i64;
        for k in 1..=nm {
            push_u(b + BAND + k as f64 * mid);
            push_u(b - BAND - k as f64 * mid);
        }
        push_u(self.u(3f64.sqrt()));
        push_u(1.5 * b);
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|x, y| (*x - *y).abs() < 1e-12 * (1.0 + y.abs()));
        edges
    }

    fn line_integral(&self, fixed: f64, density: f64, swap: bool) -> Result<RowIntegral> {
        let b = self.u(fixed);
        let grid = QuadGrid::from_edges(self.line_edges(fixed, density), false)?;
        let nodes = grid.nodes();
        let dens = density_on(&self.space, nodes)?;
        let l1 = 3f64.sqrt();
        let l2 = if 1.5 * b > self.u(l1) { self.lambda_of(1.5 * b) } else { l1 };
        let mut pieces = [0.0; 3];
        let mut far = 0.0;
        for ((&l, &w), &d) in nodes.iter().zip(grid.weights()).zip(&dens) {
            let du = (self.u(l) - b).abs();
            if du > NEAR {
                let bound = self.weight(l) * self.weight(fixed) * self.alpha_mass * self.psi.eval(du).abs();
                far += w * bound * d;
                continue;
            }
            let k = if swap { self.entry(fixed, l)? } else { self.entry(l, fixed)? };
            let v = w * k.abs() * d;
            let idx = if l <= l1 {
                0
            } else if l <= l2 {
                1
            } else {
                2
            };
            pieces[idx] += v;
        }
        let near: f64 = pieces.iter().sum();
        let total = near + far;
        let clipped = b + BAND > self.u(self.lambda_cut);
        Ok(RowIntegral {
            eta: fixed,
            i1: pieces[0],
            i2: pieces[1],
            i3: pieces[2],
            total,
            far_bound: far,
            truncated: clipped || far > 0.01 * total,
        })
    }

    /// `int |K(lambda, eta)| |c(lambda)|^-2 dlambda` over `[0, lambda_cut]`.
    pub fn row_integral(&self, eta: f64) -> Result<RowIntegral> {
        self.row_integral_with_density(eta, 1.0)
    }

    /// As [`Self::row_integral`] with all panel widths divided by `density`.
    pub fn row_integral_with_density(&self, eta: f64, density: f64) -> Result<RowIntegral> {
        self.line_integral(eta, density, false)
    }

    /// `int |K(lambda, eta)| |c(eta)|^-2 deta` over `[0, lambda_cut]`.
    pub fn column_integral(&self, lambda: f64) -> Result<RowIntegral> {
        self.line_integral(lambda, 1.0, true)
    }
}

/// `K` sampled on a product grid together with the row integrals.
#[derive(Debug, Clone)]
pub struct KernelTable {
    kernel: Arc<SchurKernel>,
    lambdas: Vec<f64>,
    etas: Vec<f64>,
    values: Vec<f64>,
    row_integrals: Vec<RowIntegral>,
}

impl KernelTable {
    pub fn build(kernel: Arc<SchurKernel>, lambdas: &[f64], etas: &[f64]) -> Result<Self> {
        let values = lambdas
            .par_iter()
            .map(|&l| etas.iter().map(|&e| kernel.entry(l, e)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?
            .concat();
        let row_integrals = etas
            .par_iter()
            .map(|&e| kernel.row_integral(e))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kernel,
            lambdas: lambdas.to_vec(),
            etas: etas.to_vec(),
            values,
            row_integrals,
        })
    }

    pub fn kernel(&self) -> &SchurKernel {
        &self.kernel
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    /// `K(lambdas[i], etas[j])`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.etas.len() + j]
    }

    pub fn row_integrals(&self) -> &[RowIntegral] {
        &self.row_integrals
    }
}

/// Row integral of the table's kernel at any `eta`.
pub fn schur_row_integral(table: &KernelTable, eta: f64) -> Result<RowIntegral> {
    table.kernel.row_integral(eta)
}

/// `n` log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Grids of a Schur study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurGrids {
    pub etas: Vec<f64>,
    pub lambda_cut: f64,
    /// Panel density multiplier for the line integrals.
    pub density: f64,
}

impl SchurGrids {
    /// 96 log-spaced points in `[0.1, 200]`, cutoff 200.
    pub fn standard() -> Self {
        Self {
            etas: log_grid(0.1, 200.0, 96),
            lambda_cut: 200.0,
            density: 1.0,
        }
    }

    pub fn doubled(&self) -> Self {
        Self {
            etas: self.etas.clone(),
            lambda_cut: 2.0 * self.lambda_cut,
            density: 2.0 * self.density,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurReport {
    pub s: f64,
    pub a: f64,
    pub lambda_cut: f64,
    /// `(s + m1 + m2 + 1 - a) / a`.
    pub gamma: f64,
    /// `(s + m1 + m2 + 1) / a`.
    pub beta: f64,
    pub rows: Vec<RowIntegral>,
    pub columns: Vec<RowIntegral>,
    pub sup_row: f64,
    pub sup_row_at: f64,
    pub sup_col: f64,
    pub sup_col_at: f64,
    pub any_truncated: bool,
}

fn sup_of(rows: &[RowIntegral]) -> (f64, f64) {
    rows.iter()
        .fold((0.0, f64::NAN), |(m, at), r| if r.total > m { (r.total, r.eta) } else { (m, at) })
}

/// Row and column integrals of `|K|` on the grids, split into `I1`, `I2`, `I3`.
pub fn schur_bound_report(space: &SpaceParams, s: f64, a: f64, grids: &SchurGrids) -> Result<SchurReport> {
    let kernel = SchurKernel::new(space, s, a, grids.lambda_cut)?;
    let rows = grids
        .etas
        .par_iter()
        .map(|&e| kernel.row_integral_with_density(e, grids.density))
        .collect::<Result<Vec<_>>>()?;
    let columns = grids
        .etas
        .par_iter()
        .map(|&l| kernel.line_integral(l, grids.density, true))
        .collect::<Result<Vec<_>>>()?;
    let (sup_row, sup_row_at) = sup_of(&rows);
    let (sup_col, sup_col_at) = sup_of(&columns);
    let m = f64::from(space.m1() + space.m2());
    Ok(SchurReport {
        s,
        a,
        lambda_cut: grids.lambda_cut,
        gamma: (s + m + 1.0 - a) / a,
        beta: (s + m + 1.0) / a,
        any_truncated: rows.iter().chain(&columns).any(|r| r.truncated),
        rows,
        columns,
        sup_row,
        sup_row_at,
        sup_col,
        sup_col_at,
    })
}

/// A report and its refinement under doubled cutoff and panel density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurStudy {
    pub base: SchurReport,
    pub refined: SchurReport,
    /// `100 |sup_refined - sup_base| / sup_base` for the row sup.
    pub stability_pct: f64,
}

pub fn schur_study(space: &SpaceParams, s: f64, a: f64, grids: &SchurGrids) -> Result<SchurStudy> {
    let base = schur_bound_report(space, s, a, grids)?;
    let refined = schur_bound_report(space, s, a, &grids.doubled())?;
    let stability_pct = 100.0 * (refined.sup_row - base.sup_row).abs() / base.sup_row;
    Ok(SchurStudy {
        base,
        refined,
        stability_pct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::make_space;
    use crate::transform::calibrate_normalization;
    use approx::assert_relative_eq;

    fn h3() -> SpaceParams {
        calibrate_normalization(&make_space(2, 0).unwrap()).unwrap()
    }

    #[test]
    fn cross_integral_on_h3_matches_closed_form() {
        // phi_l phi_e D = sin(l x) sin(e x) / (l e) on H3
        let s = h3();
        let alpha = BumpSpec::spatial();
        let grid = QuadGrid::uniform(0.0, 2.0, 400, false).unwrap();
        for &(l, e) in &[(0.5, 0.5), (3.0, 7.0), (40.0, 41.0)] {
            let want: f64 = grid
                .nodes()
                .iter()
                .zip(grid.weights())
                .map(|(&x, &w)| w * bump(&alpha, x).powi(2) * (l * x).sin() * (e * x).sin() / (l * e))
                .sum();
            assert_relative_eq!(cross_integral(&s, l, e).unwrap(), want, epsilon = 1e-12);
        }
        assert!(cross_integral(&s, 0.0, 0.0).unwrap() > 0.0);
        assert_eq!(cross_integral(&s, 2.0, 5.0).unwrap(), cross_integral(&s, 5.0, 2.0).unwrap());
    }

    #[test]
    fn interpolated_kernel_matches_direct_entries() {
        let s = h3();
        let k = SchurKernel::new(&s, 0.5, 2.0, 24.0).unwrap();
        for &(l, e) in &[(0.3, 0.31), (1.0, 2.5), (7.3, 7.9), (19.0, 18.2), (3.0, 3.0)] {
            let direct = kernel_entry(&s, l, e, 0.5, 2.0).unwrap();
            let interp = k.entry(l, e).unwrap();
            assert!((direct - interp).abs() < 1e-9 * (1.0 + direct.abs()), "{l} {e}: {direct} {interp}");
            assert_eq!(k.entry(l, e).unwrap(), k.entry(e, l).unwrap());
        }
        let l: f64 = 4.0;
        let diag = (1.0 + l).powf(1.0) * cross_integral(&s, l, l).unwrap()
            * psi_hat_table(&BumpSpec::temporal()).unwrap().eval(0.0);
        assert_relative_eq!(kernel_entry(&s, l, l, 0.5, 2.0).unwrap(), diag, max_relative = 1e-14);
        assert!(kernel_entry(&s, 1.0, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn row_and_column_integrals_agree() {
        let s = h3();
        let k = SchurKernel::new(&s, 0.5, 2.0, 24.0).unwrap();
        for &e in &[0.2, 1.0, 5.0, 12.0] {
            let r = k.row_integral(e).unwrap();
            let c = k.column_integral(e).unwrap();
            assert!(r.total > 0.0 && !r.truncated);
            assert_relative_eq!(r.total, c.total, max_relative = 1e-12);
            assert_relative_eq!(r.total, r.i1 + r.i2 + r.i3 + r.far_bound, max_relative = 1e-12);
        }
        assert!(k.row_integral(23.9).unwrap().truncated);
    }
}

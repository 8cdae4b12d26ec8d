//! Composite Gauss-Legendre grids, Filon-type weights for `exp(i t u)` and
//! piecewise Chebyshev interpolation.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::bessel::spherical_bessel_all;

/// Points per Gauss-Legendre panel.
pub const PANEL_ORDER: usize = 8;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

/// Legendre polynomials `P_0(x) .. P_{n-1}(x)`.
pub fn legendre_values(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 2..out.len() {
        out[k] = ((2 * k - 1) as f64 * x * out[k - 1] - (k - 1) as f64 * out[k - 2]) / k as f64;
    }
}

/// A composite Gauss-Legendre grid of fixed order on consecutive panels.
///
/// Grids built with a left end node carry an extra node at the lower limit
/// with weight zero, so that sampled profiles can be read off at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadGrid {
    edges: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    offset: usize,
}

impl QuadGrid {
    /// Panels between consecutive `edges`.
    pub fn from_edges(edges: Vec<f64>, left_node: bool) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidParameter("a grid needs at least one panel".into()));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter(
                "panel edges must be finite and strictly increasing".into(),
            ));
        }
        let (x, w) = panel_rule();
        let offset = usize::from(left_node);
        let total = offset + (edges.len() - 1) * PANEL_ORDER;
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        if left_node {
            nodes.push(edges[0]);
            weights.push(0.0);
        }
        for p in edges.windows(2) {
            let (mid, half) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
            for (xi, wi) in x.iter().zip(w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        Ok(Self {
            edges,
            nodes,
            weights,
            offset,
        })
    }

    /// `panels` equal panels on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, panels: usize, left_node: bool) -> Result<Self> {
        if panels == 0 || !(hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "uniform grid needs hi > lo and at least one panel (lo = {lo}, hi = {hi}, panels = {panels})"
            )));
        }
        let h = (hi - lo) / panels as f64;
        let mut edges: Vec<f64> = (0..panels).map(|i| lo + i as f64 * h).collect();
        edges.push(hi);
        Self::from_edges(edges, left_node)
    }

    /// Uniform grid on `[0, hi]` with a node at the origin.
    pub fn from_origin(hi: f64, panels: usize) -> Result<Self> {
        Self::uniform(0.0, hi, panels, true)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.edges[0]
    }

    pub fn upper(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn panel_count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn max_panel_width(&self) -> f64 {
        self.edges
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Index range of the nodes inside panel `p`.
    pub fn panel_nodes(&self, p: usize) -> std::ops::Range<usize> {
        let start = self.offset + p * PANEL_ORDER;
        start..start + PANEL_ORDER
    }

    /// Largest frequency `k` for which `exp(i k x)` is resolved by the panel
    /// rule `width <= min(0.25, pi / (4 k))`.
    pub fn resolved_frequency(&self) -> f64 {
        let w = self.max_panel_width();
        if w > 0.25 {
            0.0
        } else {
            PI / (4.0 * w)
        }
    }

    /// Integral of sampled values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Restriction to the panels whose upper edge is `<= hi` (plus the left node).
    pub fn truncated(&self, hi: f64) -> Self {
        let keep = self.edges.iter().filter(|&&e| e <= hi).count().max(2);
        let edges = self.edges[..keep].to_vec();
        Self::from_edges(edges, self.offset == 1).expect("sub-grid of a valid grid")
    }
}

/// Number of panels of width at most `min(0.25, pi / (4 freq))` on an interval of length `len`.
pub fn panels_for(len: f64, freq: f64) -> usize {
    let w = if freq > 0.0 {
        (PI / (4.0 * freq)).min(0.25)
    } else {
        0.25
    };
    ((len / w).ceil() as usize).max(1)
}

/// Weights `M_i(t)` with `int_panel G(u) exp(i t u) du ~ sum_i M_i G(u_i)` for
/// the interpolation polynomial of `G` through the given panel nodes.
///
/// The Legendre moments `int_{-1}^{1} P_k(s) e^{i W s} ds = 2 i^k j_k(W)` make
/// the rule exact for polynomials of degree `< PANEL_ORDER` for every `t`.
#[derive(Debug, Clone)]
pub struct FilonPanel {
    center: f64,
    half: f64,
    // coefficient map: legendre coefficient k = sum_i coef[k][i] G_i
    coef: [[f64; PANEL_ORDER]; PANEL_ORDER],
}

impl FilonPanel {
    /// `u` are the `PANEL_ORDER` distinct interpolation nodes inside `[lo, hi]`.
    pub fn new(lo: f64, hi: f64, u: &[f64]) -> Self {
        assert_eq!(u.len(), PANEL_ORDER);
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut v = [[0.0; PANEL_ORDER]; PANEL_ORDER];
        let mut row = [0.0; PANEL_ORDER];
        for (i, &ui) in u.iter().enumerate() {
            legendre_values((ui - center) / half, &mut row);
            v[i] = row;
        }
        // invert v (rows: nodes, cols: degree) by Gauss-Jordan with partial pivoting
        let mut a = v;
        let mut inv = [[0.0; PANEL_ORDER]; PANEL_ORDER];
        for (i, r) in inv.iter_mut().enumerate() {
            r[i] = 1.0;
        }
        for col in 0..PANEL_ORDER {
            let piv = (col..PANEL_ORDER)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap();
            a.swap(col, piv);
            inv.swap(col, piv);
            let d = a[col][col];
            for k in 0..PANEL_ORDER {
                a[col][k] /= d;
                inv[col][k] /= d;
            }
            for r in 0..PANEL_ORDER {
                if r != col {
                    let f = a[r][col];
                    if f != 0.0 {
                        for k in 0..PANEL_ORDER {
                            a[r][k] -= f * a[col][k];
                            inv[r][k] -= f * inv[col][k];
                        }
                    }
                }
            }
        }
        // v c = G  =>  c = v^-1 G; inv is v^-1 with rows indexed by degree
        Self {
            center,
            half,
            coef: inv,
        }
    }

    pub fn phase_span(&self, t: f64) -> f64 {
        (t * self.half).abs()
    }

    /// Fills `out` with the weights for frequency `t`.
    pub fn weights(&self, t: f64, out: &mut [Complex64]) {
        let omega = t * self.half;
        let mut jk = [0.0; PANEL_ORDER];
        spherical_bessel_all(PANEL_ORDER - 1, omega.abs(), &mut jk);
        let mut mom = [Complex64::new(0.0, 0.0); PANEL_ORDER];
        let mut ik = Complex64::new(1.0, 0.0);
        for k in 0..PANEL_ORDER {
            let sign = if omega < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
            mom[k] = ik * (2.0 * sign * jk[k]);
            ik *= Complex64::i();
        }
        let pre = Complex64::from_polar(self.half, t * self.center);
        for (i, o) in out.iter_mut().enumerate().take(PANEL_ORDER) {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..PANEL_ORDER {
                acc += mom[k] * self.coef[k][i];
            }
            *o = pre * acc;
        }
    }
}

/// Piecewise Chebyshev interpolation on equal sub-intervals of `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct ChebyshevPieces {
    lo: f64,
    width: f64,
    pieces: usize,
    order: usize,
    unit_nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl ChebyshevPieces {
    /// Sub-intervals no longer than `max_width`, `order` first-kind nodes each.
    pub fn new(lo: f64, hi: f64, max_width: f64, order: usize) -> Self {
        assert!(hi > lo && order >= 2 && max_width > 0.0);
        let pieces = ((hi - lo) / max_width).ceil().max(1.0) as usize;
        let width = (hi - lo) / pieces as f64;
        let unit_nodes: Vec<f64> = (0..order)
            .map(|j| -(PI * (j as f64 + 0.5) / order as f64).cos())
            .collect();
        let bary: Vec<f64> = (0..order)
            .map(|j| {
                let s = (PI * (j as f64 + 0.5) / order as f64).sin();
                if j % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        Self {
            lo,
            width,
            pieces,
            order,
            unit_nodes,
            bary,
        }
    }

    pub fn pieces(&self) -> usize {
        self.pieces
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.width * self.pieces as f64
    }

    /// Nodes of piece `p`, ascending.
    pub fn piece_nodes(&self, p: usize) -> Vec<f64> {
        let mid = self.lo + (p as f64 + 0.5) * self.width;
        self.unit_nodes
            .iter()
            .map(|x| mid + 0.5 * self.width * x)
            .collect()
    }

    /// Piece containing `x` (clamped to the range).
    pub fn piece_of(&self, x: f64) -> usize {
        let p = ((x - self.lo) / self.width).floor();
        (p.max(0.0) as usize).min(self.pieces - 1)
    }

    /// Interpolation weights at `x` for the nodes of its piece.
    pub fn weights_at(&self, x: f64, out: &mut [f64]) -> usize {
        let p = self.piece_of(x);
        let mid = self.lo + (p as f64 + 0.5) * self.width;
        let s = (x - mid) / (0.5 * self.width);
        let mut total = 0.0;
        for j in 0..self.order {
            let d = s - self.unit_nodes[j];
            if d == 0.0 {
                out[..self.order].iter_mut().for_each(|v| *v = 0.0);
                out[j] = 1.0;
                return p;
            }
            out[j] = self.bary[j] / d;
            total += out[j];
        }
        for v in out[..self.order].iter_mut() {
            *v /= total;
        }
        p
    }
}

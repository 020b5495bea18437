//! Uniform 2-D grids on disks, ellipses and squares centred at the origin.
//!
//! Nodes with level-set value < 0 are unknowns; everything else carries the
//! boundary value. Stencil arms that leave the domain are shortened to the
//! boundary crossing (Shortley–Weller), in the two axis and two diagonal directions.

use std::sync::OnceLock;

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::{ColMut, Conj};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::gauss8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainDescriptor {
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
    /// Axis-aligned square with the given side length.
    Square { side: f64 },
}

impl DomainDescriptor {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DomainDescriptor::Disk { radius } => radius > 0.0 && radius.is_finite(),
            DomainDescriptor::Ellipse { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            DomainDescriptor::Square { side } => side > 0.0 && side.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid domain {self:?}")))
        }
    }

    /// Negative inside, zero on the boundary.
    pub fn level(&self, x: f64, y: f64) -> f64 {
        match *self {
            DomainDescriptor::Disk { radius } => x * x + y * y - radius * radius,
            DomainDescriptor::Ellipse { a, b } => (x / a).powi(2) + (y / b).powi(2) - 1.0,
            DomainDescriptor::Square { side } => x.abs().max(y.abs()) - 0.5 * side,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.level(x, y) < 0.0
    }

    pub fn half_extents(&self) -> (f64, f64) {
        match *self {
            DomainDescriptor::Disk { radius } => (radius, radius),
            DomainDescriptor::Ellipse { a, b } => (a, b),
            DomainDescriptor::Square { side } => (0.5 * side, 0.5 * side),
        }
    }

    pub fn area(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            DomainDescriptor::Disk { radius } => PI * radius * radius,
            DomainDescriptor::Ellipse { a, b } => PI * a * b,
            DomainDescriptor::Square { side } => side * side,
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        match *self {
            DomainDescriptor::Disk { radius } => DomainDescriptor::Disk { radius: t * radius },
            DomainDescriptor::Ellipse { a, b } => DomainDescriptor::Ellipse { a: t * a, b: t * b },
            DomainDescriptor::Square { side } => DomainDescriptor::Square { side: t * side },
        }
    }

    /// Fraction θ ∈ (0, 1] along p → q at which the boundary is crossed; p inside, q not.
    pub fn crossing(&self, p: (f64, f64), q: (f64, f64)) -> f64 {
        let (dx, dy) = (q.0 - p.0, q.1 - p.1);
        let t = match *self {
            DomainDescriptor::Disk { .. } | DomainDescriptor::Ellipse { .. } => {
                let (a, b) = self.half_extents();
                let qa = (dx / a).powi(2) + (dy / b).powi(2);
                let qb = 2.0 * (p.0 * dx / (a * a) + p.1 * dy / (b * b));
                let qc = (p.0 / a).powi(2) + (p.1 / b).powi(2) - 1.0;
                let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
                2.0 * qc / (-qb - disc.sqrt())
            }
            DomainDescriptor::Square { side } => {
                let e = 0.5 * side;
                let mut t = 1.0f64;
                for (pc, dc) in [(p.0, dx), (p.1, dy)] {
                    if dc > 0.0 && pc + dc >= e {
                        t = t.min((e - pc) / dc);
                    } else if dc < 0.0 && pc + dc <= -e {
                        t = t.min((-e - pc) / dc);
                    }
                }
                t
            }
        };
        t.clamp(1e-10, 1.0)
    }

    /// The chord {y : (x, y) ∈ Ω}, if non-empty.
    pub fn vertical_extent(&self, x: f64) -> Option<(f64, f64)> {
        match *self {
            DomainDescriptor::Disk { radius } => {
                let d = radius * radius - x * x;
                (d > 0.0).then(|| (-d.sqrt(), d.sqrt()))
            }
            DomainDescriptor::Ellipse { a, b } => {
                let d = 1.0 - (x / a).powi(2);
                (d > 0.0).then(|| (-b * d.sqrt(), b * d.sqrt()))
            }
            DomainDescriptor::Square { side } => {
                (x.abs() < 0.5 * side).then(|| (-0.5 * side, 0.5 * side))
            }
        }
    }

    /// Euclidean distance from an interior point to ∂Ω.
    pub fn distance_to_boundary(&self, x: f64, y: f64) -> f64 {
        match *self {
            DomainDescriptor::Disk { radius } => (radius - x.hypot(y)).max(0.0),
            DomainDescriptor::Square { side } => (0.5 * side - x.abs()).min(0.5 * side - y.abs()).max(0.0),
            DomainDescriptor::Ellipse { a, b } => {
                let d2 = |t: f64| (a * t.cos() - x).powi(2) + (b * t.sin() - y).powi(2);
                let m = 512;
                let step = std::f64::consts::TAU / m as f64;
                let best = (0..m).min_by(|&i, &j| d2(i as f64 * step).total_cmp(&d2(j as f64 * step))).unwrap();
                let (mut lo, mut hi) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
                for _ in 0..100 {
                    let m1 = lo + (hi - lo) / 3.0;
                    let m2 = hi - (hi - lo) / 3.0;
                    if d2(m1) < d2(m2) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                d2(0.5 * (lo + hi)).sqrt()
            }
        }
    }

    /// Area of Ω ∩ [x0, x1] × [y0, y1].
    pub fn cell_area(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        if let DomainDescriptor::Square { side } = *self {
            let e = 0.5 * side;
            let w = (x1.min(e) - x0.max(-e)).max(0.0);
            let hgt = (y1.min(e) - y0.max(-e)).max(0.0);
            return w * hgt;
        }
        let corners = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)];
        if corners.iter().all(|&(x, y)| self.contains(x, y)) {
            return (x1 - x0) * (y1 - y0);
        }
        let panels = 8;
        let w = (x1 - x0) / panels as f64;
        let mut area = 0.0;
        for p in 0..panels {
            let a = x0 + p as f64 * w;
            for (x, wt) in gauss8(a, a + w) {
                if let Some((lo, hi)) = self.vertical_extent(x) {
                    area += wt * (hi.min(y1) - lo.max(y0)).max(0.0);
                }
            }
        }
        area
    }

    pub(crate) fn tag(&self) -> (u8, [f64; 2]) {
        match *self {
            DomainDescriptor::Disk { radius } => (0, [radius, 0.0]),
            DomainDescriptor::Ellipse { a, b } => (1, [a, b]),
            DomainDescriptor::Square { side } => (2, [side, 0.0]),
        }
    }

    pub(crate) fn from_tag(tag: u8, p: [f64; 2]) -> Result<Self> {
        let d = match tag {
            0 => DomainDescriptor::Disk { radius: p[0] },
            1 => DomainDescriptor::Ellipse { a: p[0], b: p[1] },
            2 => DomainDescriptor::Square { side: p[0] },
            t => return Err(Error::Format(format!("unknown domain tag {t}"))),
        };
        d.validate().map_err(|e| Error::Format(e.to_string()))?;
        Ok(d)
    }
}

/// Scalar field on a uniform grid; nodes outside the mask carry `boundary_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    pub inside: Vec<bool>,
    pub boundary_value: f64,
    pub domain: DomainDescriptor,
}

impl GridField {
    /// Node coordinates; the grid is symmetric about the origin, which is a node.
    pub fn coords(&self, p: usize) -> (f64, f64) {
        let (i, j) = (p % self.nx, p / self.nx);
        let (mx, my) = ((self.nx - 1) / 2, (self.ny - 1) / 2);
        ((i as f64 - mx as f64) * self.h, (j as f64 - my as f64) * self.h)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().zip(&self.inside).filter(|(_, &m)| m).map(|(v, _)| v.abs()).fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().zip(&self.inside).filter(|(_, &m)| m).map(|(v, _)| *v).fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, c: f64) -> GridField {
        let mut out = self.clone();
        for (v, &m) in out.values.iter_mut().zip(&self.inside) {
            if m {
                *v *= c;
            }
        }
        out
    }

    /// Same geometry, new values from a function of (x, y) on the mask.
    pub fn map_coords(&self, f: impl Fn(f64, f64) -> f64) -> GridField {
        let mut out = self.clone();
        for p in 0..out.values.len() {
            out.values[p] = if self.inside[p] {
                let (x, y) = self.coords(p);
                f(x, y)
            } else {
                self.boundary_value
            };
        }
        out
    }

    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Stencil arm: fraction of the full step and the neighbouring unknown (None at the boundary).
#[derive(Debug, Clone, Copy)]
pub struct Arm {
    pub theta: f64,
    pub nbr: Option<usize>,
}

/// Arm directions; consecutive pairs are opposite.
pub const DIRS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (-1, 1), (1, -1)];

/// Discrete Hessian at a node: axis second differences and the two unit-diagonal ones.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeHessian {
    pub dxx: f64,
    pub dyy: f64,
    pub dd1: f64,
    pub dd2: f64,
}

impl NodeHessian {
    pub fn dxy(&self) -> f64 {
        0.5 * (self.dd1 - self.dd2)
    }

    pub fn sk(&self, k: usize) -> f64 {
        match k {
            1 => self.dxx + self.dyy,
            _ => self.dxx * self.dyy - self.dxy().powi(2),
        }
    }

    /// Eigenvalues of the 2×2 matrix [[dxx, dxy], [dxy, dyy]], largest first.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = 0.5 * (self.dxx + self.dyy);
        let r = (0.25 * (self.dxx - self.dyy).powi(2) + self.dxy().powi(2)).sqrt();
        [m + r, m - r]
    }

    pub fn spectral_norm(&self) -> f64 {
        let [a, b] = self.eigenvalues();
        a.abs().max(b.abs())
    }
}

pub(crate) struct LaplacianLu {
    lu: Lu<usize, f64>,
}

pub struct Grid {
    pub domain: DomainDescriptor,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    mx: usize,
    my: usize,
    inside: Vec<bool>,
    /// Node index of each unknown.
    nodes: Vec<usize>,
    /// Unknown index per node, `usize::MAX` outside.
    unknown_of: Vec<usize>,
    arms: Vec<[Arm; 8]>,
    lap: OnceLock<std::result::Result<LaplacianLu, String>>,
    weights: OnceLock<Vec<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("domain", &self.domain)
            .field("h", &self.h)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("unknowns", &self.nodes.len())
            .finish()
    }
}

impl Grid {
    pub fn new(domain: DomainDescriptor, h: f64) -> Result<Self> {
        domain.validate()?;
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::param("grid spacing h must be positive"));
        }
        let (ex, ey) = domain.half_extents();
        let mx = (ex / h).ceil() as usize + 2;
        let my = (ey / h).ceil() as usize + 2;
        if (2 * mx + 1) * (2 * my + 1) > 50_000_000 {
            return Err(Error::param("grid too large"));
        }
        let (nx, ny) = (2 * mx + 1, 2 * my + 1);
        let xy = |i: usize, j: usize| ((i as f64 - mx as f64) * h, (j as f64 - my as f64) * h);
        let mut inside = vec![false; nx * ny];
        let mut nodes = Vec::new();
        let mut unknown_of = vec![usize::MAX; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = xy(i, j);
                if domain.contains(x, y) {
                    let p = j * nx + i;
                    inside[p] = true;
                    unknown_of[p] = nodes.len();
                    nodes.push(p);
                }
            }
        }
        if nodes.is_empty() {
            return Err(Error::param("grid has no interior nodes; refine h"));
        }
        let arms = nodes
            .iter()
            .map(|&p| {
                let (i, j) = ((p % nx) as i64, (p / nx) as i64);
                let pxy = xy(i as usize, j as usize);
                let mut a = [Arm { theta: 1.0, nbr: None }; 8];
                for (d, &(di, dj)) in DIRS.iter().enumerate() {
                    let (qi, qj) = ((i + di) as usize, (j + dj) as usize);
                    let q = qj * nx + qi;
                    a[d] = if inside[q] {
                        Arm { theta: 1.0, nbr: Some(unknown_of[q]) }
                    } else {
                        Arm { theta: domain.crossing(pxy, xy(qi, qj)), nbr: None }
                    };
                }
                a
            })
            .collect();
        Ok(Grid { domain, h, nx, ny, mx, my, inside, nodes, unknown_of, arms, lap: OnceLock::new(), weights: OnceLock::new() })
    }

    pub fn unknowns(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_of(&self, q: usize) -> usize {
        self.nodes[q]
    }

    pub fn unknown_of(&self, p: usize) -> Option<usize> {
        let q = self.unknown_of[p];
        (q != usize::MAX).then_some(q)
    }

    pub fn arms(&self, q: usize) -> &[Arm; 8] {
        &self.arms[q]
    }

    pub fn coords(&self, q: usize) -> (f64, f64) {
        let p = self.nodes[q];
        let (i, j) = (p % self.nx, p / self.nx);
        ((i as f64 - self.mx as f64) * self.h, (j as f64 - self.my as f64) * self.h)
    }

    pub fn node_coords(&self, p: usize) -> (f64, f64) {
        let (i, j) = (p % self.nx, p / self.nx);
        ((i as f64 - self.mx as f64) * self.h, (j as f64 - self.my as f64) * self.h)
    }

    /// Unknown index of the origin node.
    pub fn origin(&self) -> Option<usize> {
        self.unknown_of(self.my * self.nx + self.mx)
    }

    /// True when any of the eight arms is cut by the boundary.
    pub fn is_boundary_adjacent(&self, q: usize) -> bool {
        self.arms[q].iter().any(|a| a.nbr.is_none())
    }

    pub fn unknown_coords(&self) -> Vec<(f64, f64)> {
        (0..self.unknowns()).map(|q| self.coords(q)).collect()
    }

    /// Scatters unknowns into a full field with zero boundary value.
    pub fn to_field(&self, u: &[f64]) -> GridField {
        let mut values = vec![0.0; self.nx * self.ny];
        for (q, &p) in self.nodes.iter().enumerate() {
            values[p] = u[q];
        }
        GridField { h: self.h, nx: self.nx, ny: self.ny, values, inside: self.inside.clone(), boundary_value: 0.0, domain: self.domain }
    }

    /// Gathers the unknowns of a field built on this grid.
    pub fn from_field(&self, f: &GridField) -> Result<Vec<f64>> {
        if f.nx != self.nx || f.ny != self.ny || (f.h - self.h).abs() > 1e-15 * self.h || f.inside != self.inside {
            return Err(Error::param("field does not match the grid geometry"));
        }
        Ok(self.nodes.iter().map(|&p| f.values[p]).collect())
    }

    pub fn from_fn(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.unknowns()).map(|q| {
            let (x, y) = self.coords(q);
            f(x, y)
        }).collect()
    }

    fn pair(&self, u: &[f64], q: usize, fwd: usize, scale2: f64) -> f64 {
        let (af, ab) = (self.arms[q][fwd], self.arms[q][fwd + 1]);
        let uf = af.nbr.map_or(0.0, |n| u[n]);
        let ub = ab.nbr.map_or(0.0, |n| u[n]);
        let u0 = u[q];
        2.0 / ((af.theta + ab.theta) * scale2) * ((uf - u0) / af.theta - (u0 - ub) / ab.theta)
    }

    pub fn hessian(&self, u: &[f64], q: usize) -> NodeHessian {
        let h2 = self.h * self.h;
        NodeHessian {
            dxx: self.pair(u, q, 0, h2),
            dyy: self.pair(u, q, 2, h2),
            dd1: self.pair(u, q, 4, 2.0 * h2),
            dd2: self.pair(u, q, 6, 2.0 * h2),
        }
    }

    /// Nonuniform three-point gradient along the axis arms.
    pub fn gradient(&self, u: &[f64], q: usize) -> (f64, f64) {
        let d = |fwd: usize| {
            let (af, ab) = (self.arms[q][fwd], self.arms[q][fwd + 1]);
            let (b, a) = (af.theta * self.h, ab.theta * self.h);
            let uf = af.nbr.map_or(0.0, |n| u[n]) - u[q];
            let ub = ab.nbr.map_or(0.0, |n| u[n]) - u[q];
            (a * a * uf - b * b * ub) / (a * b * (a + b))
        };
        (d(0), d(2))
    }

    /// Shortley–Weller Laplacian applied to u.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        (0..self.unknowns()).map(|q| {
            let hs = self.hessian(u, q);
            hs.dxx + hs.dyy
        }).collect()
    }

    /// Triplets of the Shortley–Weller operator a11 ∂xx + a22 ∂yy + 2 a12 ∂xy with
    /// per-unknown coefficients; ∂xy is taken as half the difference of the diagonal pairs.
    pub(crate) fn operator_triplets(&self, coef: impl Fn(usize) -> (f64, f64, f64)) -> Vec<Triplet<usize, usize, f64>> {
        let h2 = self.h * self.h;
        let mut t = Vec::with_capacity(9 * self.unknowns());
        for q in 0..self.unknowns() {
            let (a11, a22, a12) = coef(q);
            let mut diag = 0.0;
            for (fwd, c0, scale2) in [(0usize, a11, h2), (2, a22, h2), (4, a12, 2.0 * h2), (6, -a12, 2.0 * h2)] {
                if c0 == 0.0 {
                    continue;
                }
                let (af, ab) = (self.arms[q][fwd], self.arms[q][fwd + 1]);
                let c = c0 * 2.0 / ((af.theta + ab.theta) * scale2);
                diag -= c * (1.0 / af.theta + 1.0 / ab.theta);
                if let Some(n) = af.nbr {
                    t.push(Triplet::new(q, n, c / af.theta));
                }
                if let Some(n) = ab.nbr {
                    t.push(Triplet::new(q, n, c / ab.theta));
                }
            }
            t.push(Triplet::new(q, q, diag));
        }
        t
    }

    fn laplacian_triplets(&self) -> Vec<Triplet<usize, usize, f64>> {
        self.operator_triplets(|_| (1.0, 1.0, 0.0))
    }

    fn lap_lu(&self) -> Result<&LaplacianLu> {
        let r = self.lap.get_or_init(|| {
            let n = self.unknowns();
            let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &self.laplacian_triplets())
                .map_err(|e| format!("{e:?}"))?;
            let lu = a.sp_lu().map_err(|e| format!("{e:?}"))?;
            Ok(LaplacianLu { lu })
        });
        r.as_ref().map_err(|e| Error::numerical(format!("sparse LU failed: {e}")))
    }

    /// Solves Δ_h u = f with zero boundary values, refining until the residual
    /// is below 1e-10·‖f‖∞.
    pub fn solve_laplacian(&self, f: &[f64]) -> Result<Vec<f64>> {
        let lu = &self.lap_lu()?.lu;
        let fnorm = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut u = f.to_vec();
        lu.solve_in_place_with_conj(Conj::No, ColMut::from_slice_mut(&mut u).as_mat_mut());
        if fnorm == 0.0 {
            return Ok(u);
        }
        let mut res = 0.0;
        for _ in 0..5 {
            let lu_u = self.laplacian(&u);
            let mut r: Vec<f64> = f.iter().zip(&lu_u).map(|(a, b)| a - b).collect();
            res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if res <= 1e-10 * fnorm {
                return Ok(u);
            }
            lu.solve_in_place_with_conj(Conj::No, ColMut::from_slice_mut(&mut r).as_mat_mut());
            for (a, b) in u.iter_mut().zip(&r) {
                *a += b;
            }
        }
        Err(Error::Numerical { msg: "Poisson solve residual above 1e-10 relative".into(), residual: Some(res / fnorm) })
    }

    /// Symmetric ghost-point Laplacian: a cut arm contributes (0 − u0)/(θ h²).
    ///
    /// Only first-order consistent at the boundary, but symmetric, so the discrete
    /// energy Σ h² (−u) L u is an exact quadratic form.
    pub fn symmetric_laplacian(&self, u: &[f64]) -> Vec<f64> {
        let h2 = self.h * self.h;
        (0..self.unknowns()).map(|q| {
            let mut s = 0.0;
            for a in &self.arms[q][..4] {
                s += match a.nbr {
                    Some(n) => u[n] - u[q],
                    None => -u[q] / a.theta,
                };
            }
            s / h2
        }).collect()
    }

    pub(crate) fn symmetric_laplacian_triplets(&self) -> Vec<Triplet<usize, usize, f64>> {
        let h2 = self.h * self.h;
        let mut t = Vec::with_capacity(5 * self.unknowns());
        for q in 0..self.unknowns() {
            let mut diag = 0.0;
            for a in &self.arms[q][..4] {
                match a.nbr {
                    Some(n) => {
                        t.push(Triplet::new(q, n, 1.0 / h2));
                        diag -= 1.0 / h2;
                    }
                    None => diag -= 1.0 / (a.theta * h2),
                }
            }
            t.push(Triplet::new(q, q, diag));
        }
        t
    }

    /// Cut-cell areas |Ω ∩ cell| for every node (outside nodes included).
    pub fn node_weights(&self) -> &[f64] {
        self.weights.get_or_init(|| {
            let hh = 0.5 * self.h;
            (0..self.nx * self.ny)
                .map(|p| {
                    let (x, y) = self.node_coords(p);
                    self.domain.cell_area(x - hh, x + hh, y - hh, y + hh)
                })
                .collect()
        })
    }

    /// Weights restricted to the unknowns.
    pub fn unknown_weights(&self) -> Vec<f64> {
        let w = self.node_weights();
        self.nodes.iter().map(|&p| w[p]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_and_crossings() {
        let g = Grid::new(DomainDescriptor::Disk { radius: 1.0 }, 0.25).unwrap();
        assert!(g.origin().is_some());
        for q in 0..g.unknowns() {
            for (d, a) in g.arms(q).iter().enumerate() {
                assert!(a.theta > 0.0 && a.theta <= 1.0);
                if a.nbr.is_none() {
                    let (x, y) = g.coords(q);
                    let (dx, dy) = DIRS[d];
                    let bx = x + a.theta * dx as f64 * g.h;
                    let by = y + a.theta * dy as f64 * g.h;
                    assert!((bx.hypot(by) - 1.0).abs() < 1e-12);
                }
            }
        }
        // (1, 0) lies on the boundary and counts as outside
        let p = g.unknown_of(g.ny / 2 * g.nx + g.nx / 2 + 4);
        assert!(p.is_none());
    }

    #[test]
    fn weights_sum_to_area() {
        for d in [
            DomainDescriptor::Disk { radius: 1.0 },
            DomainDescriptor::Ellipse { a: 1.2, b: 1.0 },
            DomainDescriptor::Square { side: 1.7 },
        ] {
            let g = Grid::new(d, 1.0 / 32.0).unwrap();
            let s: f64 = g.node_weights().iter().sum();
            assert!((s - d.area()).abs() < 1e-5 * d.area(), "{d:?}: {s}");
        }
    }

    #[test]
    fn hessian_exact_on_quadratics() {
        let g = Grid::new(DomainDescriptor::Ellipse { a: 1.0, b: 0.7 }, 0.1).unwrap();
        // u vanishes on the ellipse, so cut arms see the exact boundary value 0
        let u = g.from_fn(|x, y| x * x + (y / 0.7).powi(2) - 1.0);
        for q in 0..g.unknowns() {
            let hs = g.hessian(&u, q);
            assert!((hs.dxx - 2.0).abs() < 1e-9);
            assert!((hs.dyy - 2.0 / 0.49).abs() < 1e-9);
            assert!(hs.dxy().abs() < 1e-9);
            let (gx, gy) = g.gradient(&u, q);
            let (x, y) = g.coords(q);
            assert!((gx - 2.0 * x).abs() < 1e-9 && (gy - 2.0 * y / 0.49).abs() < 1e-9);
        }
    }

    #[test]
    fn laplacian_solve_roundtrip() {
        let g = Grid::new(DomainDescriptor::Disk { radius: 1.0 }, 1.0 / 16.0).unwrap();
        let f = g.from_fn(|x, y| 1.0 + x * y);
        let u = g.solve_laplacian(&f).unwrap();
        let back = g.laplacian(&u);
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10 * 2.0);
        }
    }

    #[test]
    fn ellipse_distance() {
        let d = DomainDescriptor::Ellipse { a: 2.0, b: 1.0 };
        assert!((d.distance_to_boundary(0.0, 0.0) - 1.0).abs() < 1e-9);
        assert!((d.distance_to_boundary(1.8, 0.0) - 0.2).abs() < 1e-9);
    }
}

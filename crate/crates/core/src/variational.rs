//! Energy functionals, weighted norms, Rayleigh quotients and the descent flow.

use faer::linalg::solvers::SolveCore;
use faer::sparse::{SparseColMat, Triplet};
use faer::{ColMut, Conj};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::problem::ProblemSpec;
use crate::radial::{gauss8, radial_sk, RadialProfile};
use crate::symfun::binomial;

/// Where a quadrature sample sits, which decides how |x|^α is integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Cell {
    Point { r: f64, area: f64 },
    /// The grid cell [−c, c]² around the origin.
    OriginSquare { c: f64 },
    /// The ball of radius r0 below the first radial sample, in dimension n.
    OriginBall { r0: f64, n: usize },
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    cell: Cell,
    u: f64,
    /// S_k(D²u) at the sample.
    sk: f64,
    /// (1/k) u_i u_j S_k^{ij}
    by_parts: f64,
    /// Smallest σ_j (j ≤ k) relative to the local Hessian scale; negative means outside the cone.
    cone_margin: f64,
}

/// Surface area of the unit sphere in R^n.
fn sphere_area(n: usize) -> f64 {
    // Γ(n/2) by recursion from Γ(1/2) = √π or Γ(1) = 1.
    let mut g = if n % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x + 1e-9 < n as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / g
}

/// ∫_{[−c,c]²} |x|^α dx for α > −2.
fn square_moment(c: f64, alpha: f64) -> f64 {
    let e = alpha + 2.0;
    let ang: f64 = (0..4)
        .flat_map(|i| {
            let a = i as f64 * std::f64::consts::FRAC_PI_4 / 4.0;
            gauss8(a, a + std::f64::consts::FRAC_PI_4 / 4.0)
        })
        .map(|(t, w)| w * t.cos().powf(-e))
        .sum();
    8.0 * c.powf(e) / e * ang
}

/// A field together with the quadrature needed to integrate over Ω.
#[derive(Debug, Clone)]
pub enum QuadratureField {
    Grid { field: GridField, weights: Vec<f64> },
    Radial { profile: RadialProfile, n: usize },
}

impl QuadratureField {
    pub fn from_grid(field: &GridField) -> Result<Self> {
        let g = Grid::new(field.domain, field.h)?;
        g.from_field(field)?;
        Ok(QuadratureField::Grid { field: field.clone(), weights: g.node_weights().to_vec() })
    }

    pub fn from_radial(profile: &RadialProfile, n: usize) -> Result<Self> {
        if n == 0 || profile.r.len() < 2 {
            return Err(Error::param("radial profile needs n >= 1 and at least two samples"));
        }
        Ok(QuadratureField::Radial { profile: profile.clone(), n })
    }

    /// Σ weights, i.e. |Ω|.
    pub fn measure(&self) -> f64 {
        match self {
            QuadratureField::Grid { weights, .. } => weights.iter().sum(),
            QuadratureField::Radial { profile, n } => sphere_area(*n) * profile.radius.powi(*n as i32) / *n as f64,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            QuadratureField::Grid { field, weights } => QuadratureField::Grid { field: field.scaled(c), weights: weights.clone() },
            QuadratureField::Radial { profile, n } => {
                let sc = |v: &Vec<f64>| v.iter().map(|x| c * x).collect();
                let p = RadialProfile { radius: profile.radius, r: profile.r.clone(), u: sc(&profile.u), du: sc(&profile.du), ddu: sc(&profile.ddu) };
                QuadratureField::Radial { profile: p, n: *n }
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            QuadratureField::Grid { .. } => 2,
            QuadratureField::Radial { n, .. } => *n,
        }
    }

    fn samples(&self, k: usize) -> Result<Vec<Sample>> {
        match self {
            QuadratureField::Grid { field, weights } => {
                if k != 1 && k != 2 {
                    return Err(Error::param("grid functionals support k = 1 or 2"));
                }
                let g = Grid::new(field.domain, field.h)?;
                let u = g.from_field(field)?;
                let origin = g.origin();
                let h2 = g.h * g.h;
                let mut out = Vec::with_capacity(g.unknowns());
                for q in 0..g.unknowns() {
                    let p = g.node_of(q);
                    let (x, y) = g.coords(q);
                    let hs = g.hessian(&u, q);
                    let (ux, uy) = g.gradient(&u, q);
                    let (sk, by_parts, margin) = if k == 1 {
                        let lap = hs.dxx + hs.dyy;
                        (lap, ux * ux + uy * uy, lap / hs.spectral_norm().max(1e-300))
                    } else {
                        let det = hs.sk(2);
                        let cof = ux * ux * hs.dyy - 2.0 * ux * uy * hs.dxy() + uy * uy * hs.dxx;
                        let scale = hs.spectral_norm().max(1e-300);
                        (det, 0.5 * cof, ((hs.dxx + hs.dyy) / scale).min(det / (scale * scale)))
                    };
                    let cell = if Some(q) == origin && (weights[p] - h2).abs() <= 1e-12 * h2 {
                        Cell::OriginSquare { c: 0.5 * g.h }
                    } else {
                        Cell::Point { r: x.hypot(y), area: weights[p] }
                    };
                    out.push(Sample { cell, u: u[q], sk, by_parts, cone_margin: margin });
                }
                Ok(out)
            }
            QuadratureField::Radial { profile, n } => {
                let n = *n;
                if k == 0 || k > n {
                    return Err(Error::param("need 1 <= k <= n"));
                }
                let om = sphere_area(n);
                let c = binomial(n - 1, k - 1);
                let pr = profile;
                let mut out = Vec::with_capacity(8 * pr.r.len());
                out.push(Sample { cell: Cell::OriginBall { r0: pr.r[0], n }, u: pr.u[0], sk: 0.0, by_parts: 0.0, cone_margin: 1.0 });
                for i in 0..pr.r.len() - 1 {
                    let (a, b) = (pr.r[i], pr.r[i + 1]);
                    for (r, w) in gauss8(a, b) {
                        let (u, du) = pr.eval(r);
                        let t = (r - a) / (b - a);
                        let ddu = (1.0 - t) * pr.ddu[i] + t * pr.ddu[i + 1];
                        let sk = radial_sk(du, ddu, r, n, k);
                        let scale = ddu.abs().max((du / r).abs()).max(1e-300);
                        let margin = (1..=k).map(|j| radial_sk(du, ddu, r, n, j) / scale.powi(j as i32)).fold(f64::INFINITY, f64::min);
                        let by_parts = c / k as f64 * du.abs().powi(k as i32 + 1) * r.powi(1 - k as i32);
                        out.push(Sample { cell: Cell::Point { r, area: w * om * r.powi(n as i32 - 1) }, u, sk, by_parts, cone_margin: margin });
                    }
                }
                Ok(out)
            }
        }
    }
}

impl Sample {
    /// ∫_cell |x|^α dx, or the regularized (|x|² + δ²)^{α/2} when δ > 0.
    fn moment(&self, alpha: f64, delta: f64) -> f64 {
        if alpha == 0.0 {
            return self.moment_area();
        }
        if delta > 0.0 {
            let r = match self.cell {
                Cell::Point { r, .. } => r,
                _ => 0.0,
            };
            return self.moment_area() * (r * r + delta * delta).powf(0.5 * alpha);
        }
        match self.cell {
            Cell::Point { r, area } => area * r.powf(alpha),
            Cell::OriginSquare { c } => square_moment(c, alpha),
            Cell::OriginBall { r0, n } => sphere_area(n) * r0.powf(alpha + n as f64) / (alpha + n as f64),
        }
    }

    fn moment_area(&self) -> f64 {
        match self.cell {
            Cell::Point { area, .. } => area,
            Cell::OriginSquare { c } => 4.0 * c * c,
            Cell::OriginBall { r0, n } => sphere_area(n) * r0.powi(n as i32) / n as f64,
        }
    }
}

/// Both forms of I_k(u) = ∫(−u) S_k(D²u).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkValue {
    pub direct: f64,
    /// (1/k) ∫ u_i u_j S_k^{ij}
    pub by_parts: f64,
}

/// Relative tolerance of the discrete cone test; matches the 5% used by the linearized check.
const CONE_TOL: f64 = 0.05;

fn check_samples(samples: &[Sample]) -> Result<()> {
    if let Some(s) = samples.iter().find(|s| s.cone_margin < -CONE_TOL) {
        return Err(Error::Cone(format!("discrete Hessian leaves the cone (relative margin {:.3e}, u = {:.3e})", s.cone_margin, s.u)));
    }
    if let Some(s) = samples.iter().find(|s| s.u > 1e-12) {
        return Err(Error::Cone(format!("field is positive ({:.3e}) inside the domain", s.u)));
    }
    Ok(())
}

pub fn functional_ik(u: &QuadratureField, k: usize) -> Result<IkValue> {
    let samples = u.samples(k)?;
    check_samples(&samples)?;
    let (mut direct, mut by_parts) = (0.0, 0.0);
    for s in &samples {
        let a = s.moment_area();
        direct += a * (-s.u) * s.sk;
        by_parts += a * s.by_parts;
    }
    Ok(IkValue { direct, by_parts })
}

fn check_integrable(n: usize, s: f64, k: usize) -> Result<()> {
    if !(n as f64 + 2.0 * s * k as f64 > 0.0) {
        return Err(Error::param(format!("|x|^(2sk) is not integrable: n + 2sk = {}", n as f64 + 2.0 * s * k as f64)));
    }
    Ok(())
}

fn weighted_power_integral(samples: &[Sample], p: f64, alpha: f64, delta: f64) -> f64 {
    samples.iter().map(|s| s.moment(alpha, delta) * s.u.abs().powf(p + 1.0)).sum()
}

/// (∫ |x|^{2sk} |u|^{p+1})^{1/(p+1)}.
pub fn weighted_norm(u: &QuadratureField, p: f64, s: f64, k: usize) -> Result<f64> {
    check_integrable(u.dim(), s, k)?;
    if !(p > -1.0) {
        return Err(Error::param("need p > -1"));
    }
    // S_k is irrelevant here; k = 1 keeps the grid sampler happy.
    let samples = u.samples(1)?;
    Ok(weighted_power_integral(&samples, p, 2.0 * s * k as f64, 0.0).powf(1.0 / (p + 1.0)))
}

/// I_k(u) / ‖u‖_{L^{k+1}(|x|^{2sk})}^{k+1}. With δ > 0 the weight is (|x|² + δ²)^{sk}.
pub fn rayleigh_quotient(u: &QuadratureField, spec: &ProblemSpec) -> Result<f64> {
    let k = spec.k;
    if u.dim() != spec.n {
        return Err(Error::param(format!("field dimension {} differs from n = {}", u.dim(), spec.n)));
    }
    check_integrable(spec.n, spec.s, k)?;
    let samples = u.samples(k)?;
    check_samples(&samples)?;
    let num: f64 = samples.iter().map(|s| s.moment_area() * (-s.u) * s.sk).sum();
    let den = weighted_power_integral(&samples, k as f64, 2.0 * spec.s * k as f64, spec.delta);
    if !(den > 0.0) {
        return Err(Error::Degenerate("zero weighted norm".into()));
    }
    Ok(num / den)
}

/// The truncated source f_M and its primitive F_M.
///
/// f_M = (1+|z|)^p for |z| ≤ M and |z|^{−2} for |z| ≥ 2M. On (M, 2M), ln f_M is the cubic
/// Hermite interpolant in ln|z| matching values and first derivatives at both ends,
/// which makes f_M C¹. The sandwich |z|^{−2} ≤ f_M ≤ 2(1+|z|)^p is checked on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub m: f64,
    pub p: f64,
    x0: f64,
    len: f64,
    g: [f64; 4],
}

impl Truncation {
    pub fn new(m: f64, p: f64) -> Result<Self> {
        if !(m > 1.0) || !m.is_finite() {
            return Err(Error::param("M must exceed 1"));
        }
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::param("p must be >= 0"));
        }
        let x0 = m.ln();
        let len = std::f64::consts::LN_2;
        let g = [p * (1.0 + m).ln(), -2.0 * (2.0 * m).ln(), p * m / (1.0 + m), -2.0];
        let t = Truncation { m, p, x0, len, g };
        for i in 1..400 {
            let z = m * (1.0 + i as f64 / 400.0);
            let f = t.f(z);
            if f < z.powi(-2) * (1.0 - 1e-12) || f > 2.0 * (1.0 + z).powf(p) {
                return Err(Error::param(format!("f_M violates |z|^-2 <= f_M <= 2(1+|z|)^p at z = {z} (M = {m}, p = {p})")));
            }
        }
        Ok(t)
    }

    pub fn f(&self, z: f64) -> f64 {
        let z = z.abs();
        if z <= self.m {
            (1.0 + z).powf(self.p)
        } else if z >= 2.0 * self.m {
            z.powi(-2)
        } else {
            let t = (z.ln() - self.x0) / self.len;
            let (t2, t3) = (t * t, t * t * t);
            let [g0, g1, d0, d1] = self.g;
            (g0 * (2.0 * t3 - 3.0 * t2 + 1.0) + g1 * (3.0 * t2 - 2.0 * t3) + self.len * (d0 * (t3 - 2.0 * t2 + t) + d1 * (t3 - t2))).exp()
        }
    }

    /// F_M(z) = ∫₀^{|z|} f_M.
    pub fn primitive(&self, z: f64) -> f64 {
        let z = z.abs();
        let head = |y: f64| ((1.0 + y).powf(self.p + 1.0) - 1.0) / (self.p + 1.0);
        if z <= self.m {
            return head(z);
        }
        // Fixed panels in ln z, so F_M is monotone across calls and not just accurate.
        const PANELS: usize = 64;
        let top = z.min(2.0 * self.m).ln();
        let width = self.len / PANELS as f64;
        let mut mid = 0.0;
        for i in 0..PANELS {
            let a = self.x0 + i as f64 * width;
            if a >= top {
                break;
            }
            mid += gauss8(a, (a + width).min(top)).map(|(y, w)| w * y.exp() * self.f(y.exp())).sum::<f64>();
        }
        let tail = if z > 2.0 * self.m { 1.0 / (2.0 * self.m) - 1.0 / z } else { 0.0 };
        head(self.m) + mid + tail
    }
}

/// J_{M,δ}(u) = ∫ [(−u) S_k(D²u)/(k+1) − (|x|² + δ²)^{sk} F_M(u)].
pub fn functional_j(u: &QuadratureField, m: f64, delta: f64, spec: &ProblemSpec, p: f64) -> Result<f64> {
    let k = spec.k;
    if !(p >= 0.0 && p < k as f64) {
        return Err(Error::param(format!("need 0 <= p < k, got p = {p}")));
    }
    if !(delta >= 0.0) || (spec.s < 0.0 && delta == 0.0) {
        return Err(Error::param("need delta > 0 for s < 0 (delta >= 0 otherwise)"));
    }
    let tr = Truncation::new(m, p)?;
    let samples = u.samples(k)?;
    check_samples(&samples)?;
    let alpha = 2.0 * spec.s * k as f64;
    Ok(samples
        .iter()
        .map(|s| s.moment_area() * (-s.u) * s.sk / (k as f64 + 1.0) - s.moment(alpha, delta) * tr.primitive(s.u))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CriticalExponent {
    Finite(f64),
    /// 2k = n: every finite exponent is subcritical, with no finite threshold.
    FiniteUnbounded,
    Infinite,
}

pub fn critical_exponent(n: usize, k: usize, s: f64) -> Result<CriticalExponent> {
    if k == 0 || k > n {
        return Err(Error::param("need 1 <= k <= n"));
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok(match (2 * k).cmp(&n) {
        std::cmp::Ordering::Less if s <= 0.0 => CriticalExponent::Finite((kf + 1.0) * (nf + 2.0 * s * kf) / (nf - 2.0 * kf)),
        std::cmp::Ordering::Less => CriticalExponent::Finite((kf + 1.0) * nf / (nf - 2.0 * kf)),
        std::cmp::Ordering::Equal => CriticalExponent::FiniteUnbounded,
        std::cmp::Ordering::Greater => CriticalExponent::Infinite,
    })
}

/// One accepted step of the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub t: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub dt: f64,
    /// max |log S_k(D²u) − log ψ_{M,δ}(x, u)|
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowState {
    pub u: GridField,
    pub t: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub records: Vec<FlowRecord>,
    pub state: FlowState,
    pub rejected_steps: usize,
}

impl FlowTrajectory {
    pub fn initial_residual(&self) -> f64 {
        self.records[0].residual
    }

    pub fn terminal_residual(&self) -> f64 {
        self.records.last().unwrap().residual
    }
}

/// Slack allowed in the descent test.
pub const DESCENT_SLACK: f64 = 1e-10;
const DT_MIN: f64 = 1e-12;

struct FlowOperator<'a> {
    g: &'a Grid,
    k: usize,
    weight: Vec<f64>,
    area: f64,
    tr: Truncation,
}

impl FlowOperator<'_> {
    /// S_k at every unknown, or None when some node leaves the open cone.
    fn sk(&self, u: &[f64]) -> Option<Vec<f64>> {
        let s: Vec<f64> = if self.k == 1 {
            self.g.symmetric_laplacian(u)
        } else {
            (0..self.g.unknowns())
                .map(|q| {
                    let hs = self.g.hessian(u, q);
                    if hs.dxx + hs.dyy > 0.0 { hs.sk(2) } else { -1.0 }
                })
                .collect()
        };
        s.iter().all(|&v| v > 0.0 && v.is_finite()).then_some(s)
    }

    fn energy(&self, u: &[f64], s: &[f64]) -> f64 {
        let kk = self.k as f64 + 1.0;
        self.area * (0..u.len()).map(|q| (-u[q]) * s[q] / kk - self.weight[q] * self.tr.primitive(u[q])).sum::<f64>()
    }

    fn velocity(&self, u: &[f64], s: &[f64]) -> Vec<f64> {
        (0..u.len()).map(|q| s[q].ln() - (self.weight[q] * self.tr.f(u[q])).ln()).collect()
    }

    /// Linearly implicit step: (diag(S) − dt A) du = dt diag(S) v, where A is the
    /// linearization of S_k at u, so that du ≈ dt (I − dt ∂_u log S_k)^{-1} v.
    fn step(&self, u: &[f64], s: &[f64], vel: &[f64], dt: f64) -> Result<Vec<f64>> {
        let n = u.len();
        let mut trip = if self.k == 1 {
            self.g.symmetric_laplacian_triplets()
        } else {
            self.g.operator_triplets(|q| {
                let hs = self.g.hessian(u, q);
                (hs.dyy, hs.dxx, -hs.dxy())
            })
        };
        for t in trip.iter_mut() {
            t.val *= -dt;
        }
        trip.extend((0..n).map(|q| Triplet::new(q, q, s[q])));
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip).map_err(|e| Error::numerical(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::numerical(format!("flow step matrix is singular: {e:?}")))?;
        let mut du: Vec<f64> = (0..n).map(|q| dt * s[q] * vel[q]).collect();
        lu.solve_in_place_with_conj(Conj::No, ColMut::from_slice_mut(&mut du).as_mat_mut());
        Ok(u.iter().zip(&du).map(|(a, b)| (a + b).min(0.0)).collect())
    }
}

/// Descent flow u_t = log S_k(D²u) − log ψ_{M,δ}(x, u), ψ = (|x|² + δ²)^{sk} f_M(u).
///
/// For k = 1 the flow uses the symmetric ghost-point Laplacian with h² cell weights, so the
/// tracked energy is an exact quadratic form and each step is a descent direction for it.
/// For k = 2 it uses the Shortley–Weller Hessian. Steps are linearly implicit in the stiff
/// S_k part. A step is rejected, and dt halved, when the new state leaves the cone or J
/// rises by more than `DESCENT_SLACK`.
pub fn gradient_flow(u0: &GridField, spec: &ProblemSpec, m: f64, p: f64, t_end: f64) -> Result<FlowTrajectory> {
    let k = spec.k;
    if k != 1 && k != 2 {
        return Err(Error::param("the grid flow supports k = 1 or 2"));
    }
    if !(p >= 0.0 && p < k as f64) {
        return Err(Error::param(format!("need 0 <= p < k, got p = {p}")));
    }
    if !(t_end > 0.0) {
        return Err(Error::param("t_end must be positive"));
    }
    let spec = ProblemSpec { domain: u0.domain, h: u0.h, ..spec.clone() };
    spec.validate_grid()?;
    let g = Grid::new(u0.domain, u0.h)?;
    let op = FlowOperator {
        g: &g,
        k,
        weight: g.unknown_coords().iter().map(|&(x, y)| spec.weight(x, y).powi(k as i32)).collect(),
        area: g.h * g.h,
        tr: Truncation::new(m, p)?,
    };
    let mut u = g.from_field(u0)?;
    let mut s = op.sk(&u).ok_or_else(|| Error::Cone("initial field is not strictly admissible".into()))?;
    let mut j = op.energy(&u, &s);
    let mut vel = op.velocity(&u, &s);
    let res = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut t = 0.0;
    let mut dt = (g.h * g.h).min(t_end);
    let mut records = vec![FlowRecord { t, j, dt: 0.0, residual: res(&vel) }];
    let mut rejected = 0;
    while t < t_end * (1.0 - 1e-12) {
        dt = dt.min(t_end - t);
        let trial = op.step(&u, &s, &vel, dt)?;
        let accepted = op.sk(&trial).and_then(|s_new| {
            let j_new = op.energy(&trial, &s_new);
            (j_new <= j + DESCENT_SLACK).then_some((s_new, j_new))
        });
        match accepted {
            Some((s_new, j_new)) => {
                u = trial;
                s = s_new;
                j = j_new;
                t += dt;
                vel = op.velocity(&u, &s);
                records.push(FlowRecord { t, j, dt, residual: res(&vel) });
                dt *= 1.5;
            }
            None => {
                rejected += 1;
                dt *= 0.5;
                if dt < DT_MIN {
                    return Err(Error::Stiff { t, dt_min: DT_MIN, trajectory: records });
                }
            }
        }
    }
    let state = FlowState { u: g.to_field(&u), t, j, dt };
    Ok(FlowTrajectory { records, state, rejected_steps: rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainDescriptor;
    use std::f64::consts::PI;

    fn disk_field(h: f64, f: impl Fn(f64) -> f64) -> QuadratureField {
        let g = Grid::new(DomainDescriptor::Disk { radius: 1.0 }, h).unwrap();
        let u = g.from_fn(|x, y| f(x * x + y * y));
        QuadratureField::from_grid(&g.to_field(&u)).unwrap()
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn square_moment_matches_area() {
        assert!((square_moment(0.5, 0.0) - 1.0).abs() < 1e-13);
        // ∫ (x² + y²) over [−1,1]² = 8/3
        assert!((square_moment(1.0, 2.0) - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn paraboloid_functionals() {
        let q = disk_field(1.0 / 64.0, |r2| 0.5 * (r2 - 1.0));
        let i1 = functional_ik(&q, 1).unwrap();
        assert!((i1.direct - PI / 2.0).abs() < 2e-3, "{i1:?}");
        assert!((i1.by_parts - PI / 2.0).abs() < 0.05, "{i1:?}");
        let i2 = functional_ik(&q, 2).unwrap();
        assert!((i2.direct - PI / 4.0).abs() < 2e-3, "{i2:?}");
        let n0 = weighted_norm(&q, 1.0, 0.0, 1).unwrap();
        assert!((n0 - (PI / 12.0).sqrt()).abs() < 1e-3, "{n0}");
        let n1 = weighted_norm(&q, 1.0, -0.5, 1).unwrap();
        assert!((n1 - (4.0 * PI / 15.0).sqrt()).abs() < 2e-3, "{n1}");
        let zero = disk_field(1.0 / 16.0, |_| 0.0);
        assert_eq!(functional_ik(&zero, 1).unwrap().direct, 0.0);
        assert_eq!(weighted_norm(&zero, 1.0, 0.0, 1).unwrap(), 0.0);
        assert!(weighted_norm(&q, 1.0, -1.0, 1).is_err());
    }

    #[test]
    fn rayleigh_of_paraboloid() {
        let q = disk_field(1.0 / 64.0, |r2| 0.5 * (r2 - 1.0));
        let spec = ProblemSpec::new(2, 1, 0.0, 0.0, DomainDescriptor::Disk { radius: 1.0 }, 1.0 / 64.0);
        let r = rayleigh_quotient(&q, &spec).unwrap();
        assert!((r - 6.0).abs() < 0.02, "{r}");
        let r3 = rayleigh_quotient(&q.scaled(3.0), &spec).unwrap();
        assert!((r3 - r).abs() <= 1e-12 * r);
        let zero = disk_field(1.0 / 16.0, |_| 0.0);
        assert!(matches!(rayleigh_quotient(&zero, &spec), Err(Error::Degenerate(_))));
    }

    #[test]
    fn cone_violation_detected() {
        let q = disk_field(1.0 / 32.0, |r2| -(1.0 - r2) * (1.0 - r2));
        assert!(matches!(functional_ik(&q, 1), Err(Error::Cone(_))));
    }

    #[test]
    fn truncation_shape() {
        for &(m, p) in &[(1.5, 0.0), (2.0, 0.5), (10.0, 1.0), (3.0, 1.9), (100.0, 1.5)] {
            let t = Truncation::new(m, p).unwrap();
            assert!((t.f(m) - (1.0 + m).powf(p)).abs() < 1e-12 * t.f(m));
            assert!((t.f(2.0 * m) - (2.0 * m).powi(-2)).abs() < 1e-12);
            // continuity of F_M across the pieces
            let e = 1e-7;
            assert!((t.primitive(m + e) - t.primitive(m) - e * t.f(m)).abs() < 1e-10);
            assert!((t.primitive(2.0 * m + e) - t.primitive(2.0 * m) - e * t.f(2.0 * m)).abs() < 1e-10);
            // F_M stays bounded
            assert!(t.primitive(1e12) <= t.primitive(2.0 * m) + 1.0 / (2.0 * m) + 1e-12);
        }
        assert!(Truncation::new(1.0, 0.0).is_err());
    }

    #[test]
    fn functional_j_examples() {
        let q = disk_field(1.0 / 64.0, |r2| 0.5 * (r2 - 1.0));
        let spec = ProblemSpec::new(2, 1, 0.0, 0.0, DomainDescriptor::Disk { radius: 1.0 }, 1.0 / 64.0);
        let j = functional_j(&q, 10.0, 0.0, &spec, 0.0).unwrap();
        assert!(j.abs() < 2e-3, "{j}");
        let j1 = functional_j(&q, 2.0, 0.0, &spec, 0.5).unwrap();
        let j2 = functional_j(&q, 20.0, 0.0, &spec, 0.5).unwrap();
        assert_eq!(j1, j2);
        let zero = disk_field(1.0 / 16.0, |_| 0.0);
        assert_eq!(functional_j(&zero, 2.0, 0.0, &spec, 0.5).unwrap(), 0.0);
        assert!(functional_j(&q, 2.0, 0.0, &spec, 1.0).is_err());
    }

    #[test]
    fn critical_exponents() {
        assert_eq!(critical_exponent(3, 1, 0.0).unwrap(), CriticalExponent::Finite(6.0));
        assert_eq!(critical_exponent(4, 1, 0.0).unwrap(), CriticalExponent::Finite(4.0));
        assert_eq!(critical_exponent(2, 2, 0.3).unwrap(), CriticalExponent::Infinite);
        assert_eq!(critical_exponent(4, 2, 0.0).unwrap(), CriticalExponent::FiniteUnbounded);
        assert_eq!(critical_exponent(5, 1, 0.5).unwrap(), CriticalExponent::Finite(2.0 * 5.0 / 3.0));
    }

    #[test]
    fn flow_descends_k1() {
        let g = Grid::new(DomainDescriptor::Disk { radius: 1.0 }, 1.0 / 16.0).unwrap();
        let u0 = g.to_field(&g.from_fn(|x, y| 0.5 * (x * x + y * y - 1.0)));
        let spec = ProblemSpec::new(2, 1, 0.0, 0.1, DomainDescriptor::Disk { radius: 1.0 }, 1.0 / 16.0);
        let tr = gradient_flow(&u0, &spec, 10.0, 0.5, 1.0).unwrap();
        assert!(tr.records.windows(2).all(|w| w[1].j <= w[0].j + DESCENT_SLACK));
        assert!(tr.terminal_residual() * 10.0 <= tr.initial_residual(), "{} {}", tr.initial_residual(), tr.terminal_residual());
    }

    #[test]
    fn flow_fixed_point_k2() {
        // det D²u = 1 = ψ for u = (r² − 1)/2 when s = 0, p = 0 and ‖u‖∞ ≤ M.
        let g = Grid::new(DomainDescriptor::Disk { radius: 1.0 }, 1.0 / 16.0).unwrap();
        let u0 = g.to_field(&g.from_fn(|x, y| 0.5 * (x * x + y * y - 1.0)));
        let spec = ProblemSpec::new(2, 2, 0.0, 0.1, DomainDescriptor::Disk { radius: 1.0 }, 1.0 / 16.0);
        let tr = gradient_flow(&u0, &spec, 10.0, 0.0, 0.05).unwrap();
        assert!(tr.initial_residual() < 1e-10);
        assert!(tr.state.u.max_abs_diff(&u0) < 1e-10);
        let js: Vec<f64> = tr.records.iter().map(|r| r.j).collect();
        assert!(js.iter().all(|&v| (v - js[0]).abs() < 1e-10));
    }
}

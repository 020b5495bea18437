//! Numerical checks of the a priori estimates, regularity and identities.

use faer::linalg::solvers::SolveCore;
use faer::sparse::SparseColMat;
use faer::{ColMut, Conj};
use serde::{Deserialize, Serialize};

use crate::dirichlet::DirichletSolver;
use crate::eigensolve::find_lambda_delta;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::problem::ProblemSpec;
use crate::radial::{gauss8, radial_sk};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// sup |x||Du|
    pub k: f64,
    /// sup |x|^{2β}|D²u|
    pub l_beta: f64,
    pub beta: f64,
    /// sup |Du|
    pub k_hat: f64,
    /// sup |D²u|
    pub l_hat: f64,
    pub field_id: String,
    pub delta: f64,
}

/// Weighted sup-norms of the gradient and Hessian over nodes at least 2h from the boundary
/// (and, for s < 0, from the origin).
pub fn estimate_norms(u: &GridField, spec: &ProblemSpec, beta: f64) -> Result<EstimateReport> {
    if !(beta > 1.0) {
        return Err(Error::param("beta must exceed 1"));
    }
    let g = Grid::new(u.domain, u.h)?;
    let v = g.from_field(u)?;
    let mut rep = EstimateReport { beta, delta: spec.delta, field_id: format!("{:?}@h={}", u.domain, u.h), ..Default::default() };
    for q in 0..g.unknowns() {
        let (x, y) = g.coords(q);
        let r = x.hypot(y);
        if u.domain.distance_to_boundary(x, y) < 2.0 * g.h {
            continue;
        }
        let (gx, gy) = g.gradient(&v, q);
        let du = gx.hypot(gy);
        let d2 = g.hessian(&v, q).spectral_norm();
        rep.k = rep.k.max(r * du);
        rep.l_beta = rep.l_beta.max(r.powf(2.0 * beta) * d2);
        if spec.s < 0.0 && r < 2.0 * g.h {
            continue;
        }
        rep.k_hat = rep.k_hat.max(du);
        rep.l_hat = rep.l_hat.max(d2);
    }
    Ok(rep)
}

/// w_k(|x|): |x|^{2−n/k} for k > n/2, log|x| for k = n/2, −|x|^{2−n/k} for k < n/2.
/// At |x| = 0 with k ≤ n/2 the value is −∞.
pub fn fundamental_solution(x_norm: f64, n: usize, k: usize) -> f64 {
    let e = 2.0 - n as f64 / k as f64;
    match (2 * k).cmp(&n) {
        std::cmp::Ordering::Greater => x_norm.powf(e),
        std::cmp::Ordering::Equal => x_norm.ln(),
        std::cmp::Ordering::Less => {
            if x_norm == 0.0 {
                f64::NEG_INFINITY
            } else {
                -x_norm.powf(e)
            }
        }
    }
}

/// (w_k′, w_k″) at r > 0.
pub fn fundamental_derivatives(r: f64, n: usize, k: usize) -> (f64, f64) {
    let e = 2.0 - n as f64 / k as f64;
    let sign = match (2 * k).cmp(&n) {
        std::cmp::Ordering::Equal => return (1.0 / r, -1.0 / (r * r)),
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Less => -1.0,
    };
    (sign * e * r.powf(e - 1.0), sign * e * (e - 1.0) * r.powf(e - 2.0))
}

/// max over radii of |S_k(D²w_k)|, which vanishes off the origin.
pub fn fundamental_residual(n: usize, k: usize, radii: &[f64]) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::param("need 1 <= k <= n"));
    }
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::param("radii must be positive"));
    }
    Ok(radii
        .iter()
        .map(|&r| {
            let (d1, d2) = fundamental_derivatives(r, n, k);
            radial_sk(d1, d2, r, n, k).abs()
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WolffValue {
    Finite(f64),
    Divergent,
}

/// W_k^μ(0, r) = ∫₀^r (μ(B_t)/t^{n−2k})^{1/k} dt/t, with t = r e^{−τ} and unit
/// Gauss–Legendre panels in τ.
pub fn wolff_potential(mu_of_ball: impl Fn(f64) -> f64, n: usize, k: usize, r: f64) -> Result<WolffValue> {
    if !(2 * k > n && k < n) {
        return Err(Error::param(format!("Wolff potential needs n/2 < k < n, got n = {n}, k = {k}")));
    }
    if !(r > 0.0) {
        return Err(Error::param("r must be positive"));
    }
    let integrand = |tau: f64| {
        let t = r * (-tau).exp();
        let m = mu_of_ball(t);
        if m <= 0.0 {
            0.0
        } else {
            (m / t.powi(n as i32 - 2 * k as i32)).powf(1.0 / k as f64)
        }
    };
    let mut total = 0.0;
    let mut peak = 0.0f64;
    let mut quiet = 0;
    for p in 0..2000 {
        let a = p as f64;
        let part: f64 = gauss8(a, a + 1.0).map(|(t, w)| w * integrand(t)).sum();
        if !part.is_finite() {
            return Ok(WolffValue::Divergent);
        }
        total += part;
        peak = peak.max(part);
        if part <= 1e-17 * total {
            quiet += 1;
            if quiet >= 3 {
                return Ok(WolffValue::Finite(total));
            }
        } else {
            quiet = 0;
        }
        // An integrand that has not decayed after many e-folds of t does not converge.
        if p >= 60 && part > 1e-3 * peak {
            return Ok(WolffValue::Divergent);
        }
    }
    if total == 0.0 {
        return Ok(WolffValue::Finite(0.0));
    }
    Ok(WolffValue::Divergent)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub alpha: f64,
    pub radii: Vec<f64>,
    pub oscillations: Vec<f64>,
    /// RMS residual of the log-log fit.
    pub residual: f64,
}

/// Fits log osc_{B_r(0)} u against log r over r_j = 2^{−j} R/4, j = 0..5.
///
/// A radius is dropped when the annulus r_{j+1} < |x| ≤ r_j holds fewer than 8 nodes;
/// at least 5 radii must remain.
pub fn holder_probe(u: &GridField, spec: &ProblemSpec) -> Result<HolderFit> {
    let _ = spec;
    let (ex, ey) = u.domain.half_extents();
    let r0 = 0.25 * ex.min(ey);
    let mut radii = Vec::new();
    let mut osc = Vec::new();
    let pts: Vec<(f64, f64)> = (0..u.values.len())
        .filter(|&p| u.inside[p])
        .map(|p| {
            let (x, y) = u.coords(p);
            (x.hypot(y), u.values[p])
        })
        .collect();
    for j in 0..6 {
        let r = r0 * 0.5f64.powi(j);
        let tol = 1e-12 * r;
        let annulus = pts.iter().filter(|(d, _)| *d > 0.5 * r + tol && *d <= r + tol).count();
        if annulus < 8 {
            continue;
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(d, v) in &pts {
            if d <= r + tol {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if hi > lo {
            radii.push(r);
            osc.push(hi - lo);
        }
    }
    if radii.len() < 5 {
        return Err(Error::param(format!("only {} usable dyadic radii; refine the grid", radii.len())));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = osc.iter().map(|o| o.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let alpha = sxy / sxx;
    let c = my - alpha * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - c - alpha * x).powi(2)).sum::<f64>() / m).sqrt();
    Ok(HolderFit { alpha, radii, oscillations: osc, residual })
}

/// Observed λ(tΩ)/λ(Ω) and the homogeneity prediction t^{−2(1+s)}.
///
/// δ is scaled with the domain so both runs solve exactly similar continuum
/// problems; h is kept fixed, so the discretizations differ.
pub fn scaling_law_check(spec: &ProblemSpec, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::param("t must be positive"));
    }
    let (l1, _) = find_lambda_delta(spec)?;
    let scaled = ProblemSpec { domain: spec.domain.scaled(t), delta: spec.delta * t, ..spec.clone() };
    let (l2, _) = if t == 1.0 { (l1, ()) } else { (find_lambda_delta(&scaled)?.0, ()) };
    Ok((l2 / l1, t.powf(-2.0 * (1.0 + spec.s))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizedEigen {
    pub lambda_phi: f64,
    /// The principal eigenvector has one sign on the mask.
    pub one_signed: bool,
    pub iterations: usize,
}

/// Principal eigenvalue of F^{ij}(D²_h u) ∂_ij φ = −λ w φ with frozen coefficients.
///
/// Multiplying by k S_k^{(k−1)/k} gives S_k^{ij} ∂_ij φ = −λ k S_k^{(k−1)/k} w φ,
/// whose coefficients stay bounded where S_k degenerates at the boundary.
pub fn linearized_eigen(u: &GridField, spec: &ProblemSpec) -> Result<LinearizedEigen> {
    let solver = DirichletSolver::new(&ProblemSpec { domain: u.domain, h: u.h, ..spec.clone() })?;
    let g = solver.grid();
    let v = g.from_field(u)?;
    let n = g.unknowns();
    let k = spec.k;

    // Cofactor-type coefficients S_k^{ij} and the factor k S_k^{(k-1)/k}.
    let mut coef = Vec::with_capacity(n);
    let mut mass = vec![0.0; n];
    for q in 0..n {
        let hs = g.hessian(&v, q);
        let (a11, a22, a12, factor) = if k == 1 {
            (1.0, 1.0, 0.0, 1.0)
        } else {
            let [e1, e2] = hs.eigenvalues();
            if e2 < -0.05 * e1.abs().max(1e-300) {
                return Err(Error::Cone(format!("Hessian not convex at node {q}: eigenvalues {e1}, {e2}")));
            }
            let det = hs.sk(2).max(0.0);
            (hs.dyy.max(0.0), hs.dxx.max(0.0), -hs.dxy(), 2.0 * det.sqrt())
        };
        mass[q] = factor * solver.weight()[q];
        coef.push((a11, a22, a12));
    }
    let trip = g.operator_triplets(|q| coef[q]);
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip).map_err(|e| Error::numerical(format!("{e:?}")))?;
    let lu = a.sp_lu().map_err(|e| Error::Cone(format!("linearized operator is singular: {e:?}")))?;

    let mut phi: Vec<f64> = v.iter().map(|x| x.min(0.0)).collect();
    if phi.iter().all(|&x| x == 0.0) {
        phi = vec![-1.0; n];
    }
    let mut lambda = f64::NAN;
    let mut iters = 0;
    for it in 1..=500 {
        iters = it;
        let mut psi: Vec<f64> = phi.iter().zip(&mass).map(|(p, m)| -m * p).collect();
        lu.solve_in_place_with_conj(Conj::No, ColMut::from_slice_mut(&mut psi).as_mat_mut());
        let (imax, pmax) = psi.iter().enumerate().fold((0, 0.0f64), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
        if pmax == 0.0 {
            return Err(Error::Degenerate("linearized iteration collapsed".into()));
        }
        // Keep the dominant entry negative, matching the eigenfunction sign.
        let sgn = if psi[imax] < 0.0 { 1.0 } else { -1.0 };
        let next: Vec<f64> = psi.iter().map(|x| sgn * x / pmax).collect();
        let new_lambda = 1.0 / pmax;
        let diff = next.iter().zip(&phi).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        phi = next;
        let done = (new_lambda - lambda).abs() <= 1e-12 * new_lambda && diff <= 1e-9;
        lambda = new_lambda;
        if done {
            break;
        }
    }
    if !(lambda > 0.0) {
        return Err(Error::Cone("principal eigenvalue not positive".into()));
    }
    let one_signed = phi.iter().all(|&x| x <= 1e-8);
    Ok(LinearizedEigen { lambda_phi: lambda, one_signed, iterations: iters })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeCheck {
    /// min over boundary-adjacent nodes of (−u)/dist(x, ∂Ω).
    pub min_ratio: f64,
    /// The field vanishes on the boundary ring.
    pub degenerate: bool,
}

pub fn boundary_slope_check(u: &GridField, spec: &ProblemSpec) -> Result<SlopeCheck> {
    let _ = spec;
    let g = Grid::new(u.domain, u.h)?;
    let v = g.from_field(u)?;
    let mut min_ratio = f64::INFINITY;
    for q in 0..g.unknowns() {
        if !g.is_boundary_adjacent(q) {
            continue;
        }
        let (x, y) = g.coords(q);
        let d = u.domain.distance_to_boundary(x, y);
        if d <= 1e-3 * g.h {
            continue;
        }
        min_ratio = min_ratio.min(-v[q] / d);
    }
    if !min_ratio.is_finite() || min_ratio <= 0.0 {
        return Ok(SlopeCheck { min_ratio: min_ratio.max(0.0).min(if min_ratio.is_finite() { min_ratio } else { 0.0 }), degenerate: min_ratio == 0.0 || !min_ratio.is_finite() });
    }
    Ok(SlopeCheck { min_ratio, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainDescriptor;

    fn disk_spec(h: f64) -> ProblemSpec {
        ProblemSpec::new(2, 1, 0.0, 0.0, DomainDescriptor::Disk { radius: 1.0 }, h)
    }

    fn paraboloid(h: f64) -> GridField {
        let g = Grid::new(DomainDescriptor::Disk { radius: 1.0 }, h).unwrap();
        let u = g.from_fn(|x, y| 0.5 * (x * x + y * y - 1.0));
        g.to_field(&u)
    }

    #[test]
    fn estimates_on_paraboloid() {
        let f = paraboloid(1.0 / 64.0);
        let r = estimate_norms(&f, &disk_spec(1.0 / 64.0), 1.5).unwrap();
        // sup over nodes at least 2h inside
        assert!((r.k - 1.0).abs() < 0.07, "{}", r.k);
        assert!((r.l_beta - 1.0).abs() < 0.2, "{}", r.l_beta);
        assert!((r.l_hat - 1.0).abs() < 1e-9);
        assert!(estimate_norms(&f, &disk_spec(1.0 / 64.0), 1.0).is_err());
    }

    #[test]
    fn fundamental_examples() {
        assert_eq!(fundamental_solution(1.0, 3, 2), 1.0);
        assert_eq!(fundamental_solution(1.0, 4, 2), 0.0);
        assert!((fundamental_solution(2.0, 4, 1) + 0.25).abs() < 1e-15);
        assert_eq!(fundamental_solution(0.0, 4, 1), f64::NEG_INFINITY);
        assert_eq!(fundamental_solution(0.0, 4, 2), f64::NEG_INFINITY);
        let radii = [0.5, 0.8, 1.3, 2.0];
        assert!(fundamental_residual(3, 2, &radii).unwrap() <= 1e-10);
        assert!(fundamental_residual(4, 2, &radii).unwrap() <= 1e-10);
        assert!(fundamental_residual(5, 1, &radii).unwrap() <= 1e-10);
    }

    #[test]
    fn wolff_examples() {
        let c = 4.0 * std::f64::consts::PI / 3.0;
        let r = 0.7;
        let WolffValue::Finite(v) = wolff_potential(|t| c * t.powi(3), 3, 2, r).unwrap() else { panic!() };
        let exact = c.sqrt() * r * r / 2.0;
        assert!((v - exact).abs() < 1e-10 * exact);
        assert_eq!(wolff_potential(|_| 0.0, 3, 2, r).unwrap(), WolffValue::Finite(0.0));
        assert!(wolff_potential(|t| t, 3, 1, r).is_err());
        // μ(B_t) = t^{n-2k} makes the integrand constant
        assert_eq!(wolff_potential(|t| t.powi(-1), 3, 2, r).unwrap(), WolffValue::Divergent);
    }

    #[test]
    fn holder_synthetic() {
        let g = Grid::new(DomainDescriptor::Disk { radius: 1.0 }, 1.0 / 256.0).unwrap();
        for a in [1.5, 2.0, 0.7] {
            let f = g.to_field(&g.from_fn(|x, y| x.hypot(y).powf(a)));
            let fit = holder_probe(&f, &disk_spec(1.0 / 256.0)).unwrap();
            assert!((fit.alpha - a).abs() < 0.05, "{a}: {}", fit.alpha);
        }
        let coarse = Grid::new(DomainDescriptor::Disk { radius: 1.0 }, 1.0 / 16.0).unwrap();
        let f = coarse.to_field(&coarse.from_fn(|x, y| x * x + y * y));
        assert!(holder_probe(&f, &disk_spec(1.0 / 16.0)).is_err());
    }

    #[test]
    fn slope_examples() {
        let f = paraboloid(1.0 / 64.0);
        let c = boundary_slope_check(&f, &disk_spec(1.0 / 64.0)).unwrap();
        assert!(!c.degenerate && (c.min_ratio - 1.0).abs() < 0.05, "{c:?}");
        let z = f.scaled(0.0);
        let c = boundary_slope_check(&z, &disk_spec(1.0 / 64.0)).unwrap();
        assert!(c.degenerate && c.min_ratio == 0.0);
    }

    #[test]
    fn scaling_identity() {
        let (r, e) = scaling_law_check(&disk_spec(1.0 / 16.0), 1.0).unwrap();
        assert_eq!((r, e), (1.0, 1.0));
    }
}

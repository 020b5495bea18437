//! Grid Dirichlet solvers: weighted Poisson (k = 1), Monge–Ampère (k = n = 2),
//! and the Picard iteration for S_k(D²u) = [(|x|²+δ²)^s (1 − λu)]^k.
//!
//! Monge–Ampère uses the Poisson-iteration form
//! Δu = sqrt((u_xx − u_yy)² + 4u_xy² + 4f),
//! which selects the convex branch and reuses the factored Laplacian.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::problem::ProblemSpec;

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowUpReason {
    /// min u fell below −cap.
    Cap,
    /// ‖u‖∞ more than doubled for the configured number of consecutive iterations.
    Doubling,
    /// Every nodewise increment ratio exceeded 1 for the configured window.
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum PicardStatus {
    Converged { extrapolated: bool },
    BlowUp { reason: BlowUpReason },
    /// Neither outcome was established within the iteration cap.
    Undecided,
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub status: PicardStatus,
    /// Fixed point (possibly geometric-tail extrapolated) when converged; last iterate otherwise.
    pub u: Vec<f64>,
    pub iterations: usize,
    /// Last nodewise increment ratio bounds, when available.
    pub ratio_bounds: Option<(f64, f64)>,
    /// Largest nodewise violation of u_{m+1} ≤ u_m seen.
    pub max_increase: f64,
}

impl PicardOutcome {
    pub fn converged(&self) -> bool {
        matches!(self.status, PicardStatus::Converged { .. })
    }

    pub fn blew_up(&self) -> bool {
        matches!(self.status, PicardStatus::BlowUp { .. })
    }

    /// Estimated spectral radius of the iteration near this λ.
    pub fn ratio(&self) -> Option<f64> {
        self.ratio_bounds.map(|(a, b)| 0.5 * (a + b))
    }
}

/// Grid, weights and factorization for one problem specification.
#[derive(Debug, Clone)]
pub struct DirichletSolver {
    pub spec: ProblemSpec,
    grid: Arc<Grid>,
    weight: Vec<f64>,
}

impl DirichletSolver {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        spec.validate_grid()?;
        let grid = Arc::new(Grid::new(spec.domain, spec.h)?);
        Self::with_grid(spec, grid)
    }

    /// Reuses an existing grid (same domain and h).
    pub fn with_grid(spec: &ProblemSpec, grid: Arc<Grid>) -> Result<Self> {
        spec.validate_grid()?;
        if grid.domain != spec.domain || grid.h != spec.h {
            return Err(Error::param("grid does not match the problem specification"));
        }
        let weight = grid.from_fn(|x, y| spec.weight(x, y));
        Ok(DirichletSolver { spec: spec.clone(), grid, weight })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<Grid> {
        self.grid.clone()
    }

    /// (|x|²+δ²)^s at every unknown.
    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn poisson(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("source must be finite on the mask"));
        }
        self.grid.solve_laplacian(f)
    }

    /// det D²u = f, u = 0 on the boundary. Returns the solution and the inner iteration count.
    pub fn monge_ampere(&self, f: &[f64], warm: Option<&[f64]>, tol: f64) -> Result<(Vec<f64>, usize)> {
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("source must be finite on the mask"));
        }
        if f.iter().any(|&v| v < 0.0) {
            return Err(Error::param("Monge-Ampere source must be nonnegative"));
        }
        let g = &self.grid;
        let mut v = match warm {
            Some(w) => w.to_vec(),
            None => g.solve_laplacian(&f.iter().map(|x| 2.0 * x.sqrt()).collect::<Vec<_>>())?,
        };
        let mut diff = f64::INFINITY;
        for it in 1..=self.spec.solver.inner_max {
            let rhs: Vec<f64> = (0..g.unknowns())
                .map(|q| {
                    let hs = g.hessian(&v, q);
                    ((hs.dxx - hs.dyy).powi(2) + 4.0 * hs.dxy().powi(2) + 4.0 * f[q]).sqrt()
                })
                .collect();
            let next = g.solve_laplacian(&rhs)?;
            diff = next.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            v = next;
            if diff <= tol * sup(&v).max(1.0) {
                return Ok((v, it));
            }
        }
        Err(Error::Numerical { msg: "Monge-Ampere iteration hit the sweep cap".into(), residual: Some(diff) })
    }

    /// Solves S_k(D²u) = f for the configured k.
    pub fn sk_solve(&self, f: &[f64], warm: Option<&[f64]>, tol: f64) -> Result<Vec<f64>> {
        match self.spec.k {
            1 => self.poisson(f),
            _ => Ok(self.monge_ampere(f, warm, tol)?.0),
        }
    }

    /// Discrete S_k(D²_h u) at every unknown.
    pub fn sk_apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.grid.unknowns()).map(|q| self.grid.hessian(u, q).sk(self.spec.k)).collect()
    }

    /// Right-hand side [(|x|²+δ²)^s (1 − λu)]^k.
    pub fn regularized_source(&self, u: &[f64], lambda: f64) -> Vec<f64> {
        let k = self.spec.k as i32;
        u.iter().zip(&self.weight).map(|(&v, &w)| (w * (1.0 - lambda * v)).powi(k)).collect()
    }

    /// Picard iteration u_{m+1} = S(source(u_m)) from u₀ = 0.
    ///
    /// Iterates decrease monotonically. The increments d_m satisfy d_{m+1} ≈ T d_m for the
    /// linearized iteration map T, which is positive; the nodewise ratios d_{m+1}/d_m then
    /// bracket its spectral radius (Collatz–Wielandt). A window of ratios above 1 signals
    /// blow-up; a window below 1 signals convergence, and the geometric tail is summed.
    pub fn regularized(&self, lambda: f64) -> Result<PicardOutcome> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::param("lambda must be >= 0"));
        }
        let sp = &self.spec.solver;
        let n = self.grid.unknowns();
        let mut u = vec![0.0; n];
        let mut d_prev: Option<Vec<f64>> = None;
        let (mut above, mut below, mut doubling) = (0usize, 0usize, 0usize);
        let mut max_increase = 0.0f64;
        let mut bounds = None;
        let mut inner_tol = sp.inner_tol;

        for m in 1..=sp.picard_max {
            let src = self.regularized_source(&u, lambda);
            let next = self.sk_solve(&src, Some(&u), inner_tol)?;
            let d: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
            let (un_old, un) = (sup(&u), sup(&next));
            let dn = sup(&d);

            let inc = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0);
            let slack = 1e-8 * un.max(1.0) + if self.spec.k == 2 { 100.0 * inner_tol * un.max(1.0) } else { 0.0 };
            max_increase = max_increase.max(inc);
            if inc > slack {
                return Err(Error::Numerical {
                    msg: format!("Picard iterates not monotone at lambda = {lambda} (increase {inc:e})"),
                    residual: Some(inc),
                });
            }

            if dn <= sp.picard_tol * un.max(1.0) {
                return Ok(PicardOutcome { status: PicardStatus::Converged { extrapolated: false }, u: next, iterations: m, ratio_bounds: bounds, max_increase });
            }
            if next.iter().any(|&v| v < -sp.blowup_cap) {
                return Ok(PicardOutcome { status: PicardStatus::BlowUp { reason: BlowUpReason::Cap }, u: next, iterations: m, ratio_bounds: bounds, max_increase });
            }
            doubling = if un > 2.0 * un_old && un_old > 0.0 { doubling + 1 } else { 0 };
            if doubling >= sp.doubling_window {
                return Ok(PicardOutcome { status: PicardStatus::BlowUp { reason: BlowUpReason::Doubling }, u: next, iterations: m, ratio_bounds: bounds, max_increase });
            }

            if let Some(dp) = &d_prev {
                let dpn = sup(dp);
                let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
                for (a, b) in d.iter().zip(dp) {
                    if *b < -1e-6 * dpn {
                        let r = a / b;
                        rmin = rmin.min(r);
                        rmax = rmax.max(r);
                    }
                }
                if rmin.is_finite() {
                    bounds = Some((rmin, rmax));
                    above = if rmin > 1.0 { above + 1 } else { 0 };
                    below = if rmax < 1.0 { below + 1 } else { 0 };
                    if above >= sp.ratio_window {
                        return Ok(PicardOutcome { status: PicardStatus::BlowUp { reason: BlowUpReason::Ratio }, u: next, iterations: m, ratio_bounds: bounds, max_increase });
                    }
                    // Extrapolate once the increments have settled onto one direction.
                    if below >= sp.ratio_window && rmax - rmin <= 1e-4 {
                        let r = dn / dpn;
                        let c = r / (1.0 - r);
                        let u_inf: Vec<f64> = next.iter().zip(&d).map(|(a, b)| a + c * b).collect();
                        return Ok(PicardOutcome { status: PicardStatus::Converged { extrapolated: true }, u: u_inf, iterations: m, ratio_bounds: bounds, max_increase });
                    }
                }
            }
            if self.spec.k == 2 {
                inner_tol = (1e-6 * dn / un.max(1.0)).clamp(sp.inner_tol, 1e-6);
            }
            u = next;
            d_prev = Some(d);
        }
        Ok(PicardOutcome { status: PicardStatus::Undecided, u, iterations: sp.picard_max, ratio_bounds: bounds, max_increase })
    }
}

fn check_source(solver: &DirichletSolver, source: &GridField) -> Result<Vec<f64>> {
    solver.grid().from_field(source)
}

/// Δ_h u = source on the mask, u = 0 outside.
pub fn solve_poisson(spec: &ProblemSpec, source: &GridField) -> Result<GridField> {
    let s = DirichletSolver::new(&ProblemSpec { k: 1, ..spec.clone() })?;
    let f = check_source(&s, source)?;
    Ok(s.grid().to_field(&s.poisson(&f)?))
}

/// det D²_h u = source on the mask, u = 0 outside, convex branch.
pub fn solve_monge_ampere_2d(spec: &ProblemSpec, source: &GridField) -> Result<GridField> {
    let s = DirichletSolver::new(&ProblemSpec { k: 2, ..spec.clone() })?;
    let f = check_source(&s, source)?;
    let tol = spec.solver.inner_tol;
    Ok(s.grid().to_field(&s.monge_ampere(&f, None, tol)?.0))
}

/// Picard iteration for the regularized problem at fixed λ.
pub fn solve_regularized_dirichlet(spec: &ProblemSpec, lambda: f64) -> Result<(PicardOutcome, GridField)> {
    let s = DirichletSolver::new(spec)?;
    let out = s.regularized(lambda)?;
    let field = s.grid().to_field(&out.u);
    Ok((out, field))
}

//! λ_δ as the convergence/blow-up threshold of the Picard scheme, the δ → 0
//! continuation, and an inverse power iteration used as an independent check.

use serde::{Deserialize, Serialize};

use crate::dirichlet::{DirichletSolver, PicardOutcome, PicardStatus};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::problem::ProblemSpec;
use crate::radial::shoot_eigen;
use crate::verify::{estimate_norms, EstimateReport};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EigenDiagnostics {
    pub method: String,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// Number of λ values tried (bisection) or outer iterations (power method).
    pub runs: usize,
    pub inner_iterations: usize,
    /// The lower endpoint converged and the upper one blew up.
    pub bracket_valid: bool,
    /// Bisection stopped because the Picard test could not decide within its cap.
    pub resolution_limited: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda: f64,
    /// Normalized eigenfunction: ≤ 0 with ‖·‖∞ = 1.
    pub field: GridField,
    pub delta: f64,
    /// ‖u‖∞ of the solution at the last convergent λ, before normalization.
    pub sup_norm_at_bracket: f64,
    pub residual: Option<f64>,
    pub diagnostics: EigenDiagnostics,
}

/// Scales to ‖u‖∞ = 1 with u ≤ 0.
pub fn normalize(u: &[f64]) -> Result<Vec<f64>> {
    let m = u.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(m < 0.0) {
        return Err(Error::Degenerate("field has no negative values".into()));
    }
    Ok(u.iter().map(|&v| (v / -m).min(0.0)).collect())
}

fn initial_guess(spec: &ProblemSpec) -> f64 {
    let area = spec.domain.area();
    let r_eq = (area / std::f64::consts::PI).sqrt();
    shoot_eigen(spec.n, spec.k, spec.s, r_eq, 1e-3)
        .map(|e| e.lambda1)
        .unwrap_or(1.0 / (r_eq * r_eq))
}

/// Locates λ_δ by bisection between a convergent and a blow-up λ.
pub fn find_lambda_delta(spec: &ProblemSpec) -> Result<(f64, EigenResult)> {
    let solver = DirichletSolver::new(spec)?;
    find_lambda_delta_with(&solver)
}

pub fn find_lambda_delta_with(solver: &DirichletSolver) -> Result<(f64, EigenResult)> {
    let spec = &solver.spec;
    let sp = &spec.solver;
    let mut runs = 0usize;
    let mut inner = 0usize;
    let mut run = |lambda: f64| -> Result<PicardOutcome> {
        runs += 1;
        let out = solver.regularized(lambda)?;
        inner += out.iterations;
        Ok(out)
    };

    let zero = run(0.0)?;
    if !zero.converged() {
        return Err(Error::numerical("Picard iteration does not converge at lambda = 0"));
    }

    let mut lo: Option<(f64, PicardOutcome)> = Some((0.0, zero));
    let mut hi: Option<f64> = None;
    let mut lam = initial_guess(spec);
    let mut resolution_limited = false;

    // Bracketing: the ratio of successive increments estimates λ/λ_δ.
    for _ in 0..80 {
        if lam > sp.lambda_ceiling {
            return Err(Error::Ceiling { ceiling: sp.lambda_ceiling });
        }
        let out = run(lam)?;
        let est = out.ratio().filter(|r| *r > 0.0).map(|r| lam / r);
        let out_status = out.status;
        match out.status {
            PicardStatus::Converged { .. } => {
                if lo.as_ref().map_or(true, |(l, _)| lam > *l) {
                    lo = Some((lam, out));
                }
            }
            PicardStatus::BlowUp { .. } => {
                if hi.map_or(true, |h| lam < h) {
                    hi = Some(lam);
                }
            }
            PicardStatus::Undecided => {}
        }
        let lo_l = lo.as_ref().map(|(l, _)| *l).unwrap_or(0.0);
        if hi.is_some() && lo_l > 0.0 {
            break;
        }
        lam = if matches!(out_status, PicardStatus::Undecided) {
            // Too close to the threshold to classify: step outward.
            if lo_l == 0.0 { lam * 0.995 } else { lam * 1.005 }
        } else if hi.is_none() {
            est.filter(|&e| e > lam).map_or(lam * 1.5, |e| e * 1.01)
        } else {
            est.filter(|&e| e < lam && e > 0.0).map_or(lam / 1.5, |e| e * 0.99)
        };
    }
    let Some(mut h) = hi else {
        return Err(Error::Ceiling { ceiling: lam });
    };
    let (mut l, mut lo_out) = lo.ok_or_else(|| Error::numerical("no convergent lambda found"))?;
    if l == 0.0 {
        return Err(Error::Bracket("could not find a convergent lambda > 0".into()));
    }

    while h - l > sp.lambda_tol * h {
        let mid = 0.5 * (l + h);
        let out = run(mid)?;
        match out.status {
            PicardStatus::Converged { .. } => {
                l = mid;
                lo_out = out;
            }
            PicardStatus::BlowUp { .. } => h = mid,
            PicardStatus::Undecided => {
                resolution_limited = true;
                break;
            }
        }
    }

    let lambda = 0.5 * (l + h);
    let sup_norm = lo_out.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let phi = normalize(&lo_out.u)?;
    let field = solver.grid().to_field(&phi);
    let mut result = EigenResult {
        lambda,
        field,
        delta: spec.delta,
        sup_norm_at_bracket: sup_norm,
        residual: None,
        diagnostics: EigenDiagnostics {
            method: "bisection".into(),
            lambda_lo: l,
            lambda_hi: h,
            runs,
            inner_iterations: inner,
            bracket_valid: true,
            resolution_limited,
            converged: !resolution_limited,
        },
    };
    result.residual = eigen_residual_with(solver, &result);
    Ok((lambda, result))
}

/// Relative residual ‖S_k(D²_h u) − (w_δ λ |u|)^k‖∞ / ‖(w_δ λ |u|)^k‖∞ over nodes at least
/// 2h from the origin and the boundary. `None` when the right-hand side vanishes.
pub fn eigen_residual(result: &EigenResult, spec: &ProblemSpec) -> Result<Option<f64>> {
    let solver = DirichletSolver::new(spec)?;
    Ok(eigen_residual_with(&solver, result))
}

pub fn eigen_residual_with(solver: &DirichletSolver, result: &EigenResult) -> Option<f64> {
    let g = solver.grid();
    let u = g.from_field(&result.field).ok()?;
    let k = solver.spec.k as i32;
    let w = solver.weight();
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for q in 0..g.unknowns() {
        let (x, y) = g.coords(q);
        if x.hypot(y) < 2.0 * g.h || solver.spec.domain.distance_to_boundary(x, y) < 2.0 * g.h {
            continue;
        }
        let rhs = (w[q] * result.lambda * u[q].abs()).powi(k);
        let lhs = g.hessian(&u, q).sk(solver.spec.k);
        num = num.max((lhs - rhs).abs());
        den = den.max(rhs.abs());
    }
    (den > 0.0).then(|| num / den)
}

/// Inverse power iteration: solve S_k(D²v) = (w_δ |u_m|)^k, λ = 1/‖v‖∞, u_{m+1} = λv.
pub fn inverse_power_iteration(spec: &ProblemSpec, max_outer: usize) -> Result<EigenResult> {
    let solver = DirichletSolver::new(spec)?;
    inverse_power_iteration_with(&solver, max_outer, None)
}

pub fn inverse_power_iteration_with(solver: &DirichletSolver, max_outer: usize, init: Option<&GridField>) -> Result<EigenResult> {
    let g = solver.grid();
    let spec = &solver.spec;
    let k = spec.k as i32;
    let w = solver.weight();
    let mut u = match init {
        Some(f) => normalize(&g.from_field(f)?)?,
        None => normalize(&solver.sk_solve(&w.iter().map(|v| v.powi(k)).collect::<Vec<_>>(), None, spec.solver.inner_tol)?)?,
    };
    let mut v_prev: Option<Vec<f64>> = None;
    let mut lambda = f64::NAN;
    let mut converged = false;
    let mut outer = 0;
    for m in 1..=max_outer {
        outer = m;
        let rhs: Vec<f64> = u.iter().zip(w).map(|(a, b)| (b * a.abs()).powi(k)).collect();
        let v = solver.sk_solve(&rhs, v_prev.as_deref(), spec.solver.inner_tol)?;
        let vn = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if vn == 0.0 {
            return Err(Error::Degenerate("inverse power step produced zero".into()));
        }
        lambda = 1.0 / vn;
        let next = normalize(&v)?;
        let diff = next.iter().zip(&u).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        u = next;
        v_prev = Some(v);
        if diff <= spec.solver.power_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numerical(format!("inverse power iteration did not converge in {max_outer} steps")));
    }
    let mut result = EigenResult {
        lambda,
        field: g.to_field(&u),
        delta: spec.delta,
        sup_norm_at_bracket: f64::NAN,
        residual: None,
        diagnostics: EigenDiagnostics {
            method: "inverse_power".into(),
            lambda_lo: lambda,
            lambda_hi: lambda,
            runs: outer,
            inner_iterations: 0,
            bracket_valid: false,
            resolution_limited: false,
            converged,
        },
    };
    result.residual = eigen_residual_with(solver, &result);
    Ok(result)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub lambda: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub estimates: EstimateReport,
    pub resolution_limited: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub lambda1: f64,
    /// "richardson" or "last" (fit rejected).
    pub extrapolation: String,
    pub fitted_exponent: Option<f64>,
    /// Indices i with rows i, i+1 ordered against the sign rule beyond bracket width.
    pub monotonicity_violations: Vec<usize>,
    /// Observed direction of λ_δ as δ decreases: "increasing", "decreasing", "constant" or "mixed".
    pub observed_direction: String,
    pub beta: f64,
}

/// Default β for the weighted Hessian column.
pub const DEFAULT_BETA: f64 = 1.5;

/// Runs find_lambda_delta for each δ (strictly decreasing, all > 0) and extrapolates δ → 0.
pub fn sweep_delta(spec: &ProblemSpec, deltas: &[f64]) -> Result<SweepReport> {
    sweep_delta_with(spec, deltas, 1, |_, _| {})
}

/// Sweep with up to `jobs` δ values solved concurrently; `on_row` sees each finished row.
pub fn sweep_delta_with(
    spec: &ProblemSpec,
    deltas: &[f64],
    jobs: usize,
    on_row: impl Fn(usize, &EigenResult) + Sync,
) -> Result<SweepReport> {
    if deltas.is_empty() {
        return Err(Error::param("need at least one delta"));
    }
    if deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::param("all deltas must be > 0"));
    }
    if deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param("deltas must be strictly decreasing"));
    }
    spec.with_delta(deltas[0]).validate_grid()?;
    let grid = std::sync::Arc::new(crate::grid::Grid::new(spec.domain, spec.h)?);
    let solve_one = |i: usize| -> Result<SweepRow> {
        let sp = spec.with_delta(deltas[i]);
        let solver = DirichletSolver::with_grid(&sp, grid.clone())?;
        let (lambda, res) = find_lambda_delta_with(&solver)?;
        on_row(i, &res);
        let estimates = estimate_norms(&res.field, &sp, DEFAULT_BETA)?;
        Ok(SweepRow {
            delta: deltas[i],
            lambda,
            lambda_lo: res.diagnostics.lambda_lo,
            lambda_hi: res.diagnostics.lambda_hi,
            estimates,
            resolution_limited: res.diagnostics.resolution_limited,
        })
    };
    let rows = run_indexed(deltas.len(), jobs, solve_one)?;
    Ok(assemble_sweep(spec.s, rows))
}

/// Runs `f(0..n)` on up to `jobs` threads, returning results in index order.
pub fn run_indexed<T: Send>(n: usize, jobs: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let jobs = jobs.clamp(1, n.max(1));
    if jobs == 1 {
        return (0..n).map(&f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<T>>>> = (0..n).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|sc| {
        for _ in 0..jobs {
            sc.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let r = f(i);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("job not run")).collect()
}

pub fn assemble_sweep(s: f64, rows: Vec<SweepRow>) -> SweepReport {
    let mut violations = Vec::new();
    let mut ups = 0;
    let mut downs = 0;
    for (i, w) in rows.windows(2).enumerate() {
        let slack = (w[0].lambda_hi - w[0].lambda_lo) + (w[1].lambda_hi - w[1].lambda_lo);
        let change = w[1].lambda - w[0].lambda;
        if change > slack {
            ups += 1;
        } else if change < -slack {
            downs += 1;
        }
        // δ decreases along the rows: s > 0 wants λ non-decreasing, s < 0 non-increasing.
        if (s > 0.0 && change < -slack) || (s < 0.0 && change > slack) {
            violations.push(i);
        }
    }
    let observed_direction = match (ups, downs) {
        (0, 0) => "constant",
        (_, 0) => "increasing",
        (0, _) => "decreasing",
        _ => "mixed",
    }
    .to_string();

    let (lambda1, extrapolation, q) = match richardson(&rows) {
        Some((l, q)) => (l, "richardson".to_string(), Some(q)),
        None => (rows.last().unwrap().lambda, "last".to_string(), None),
    };
    SweepReport { rows, lambda1, extrapolation, fitted_exponent: q, monotonicity_violations: violations, observed_direction, beta: DEFAULT_BETA }
}

/// Fits λ_δ = λ₁ + c δ^q through the last three rows with q ∈ [0.5, 2].
///
/// Rejected when no q in range fits, or when a fourth row is available and its
/// misfit exceeds 10% of its modeled offset c δ^q.
fn richardson(rows: &[SweepRow]) -> Option<(f64, f64)> {
    let m = rows.len();
    if m < 3 {
        return None;
    }
    let (d1, d2, d3) = (rows[m - 3].delta, rows[m - 2].delta, rows[m - 1].delta);
    let (l1, l2, l3) = (rows[m - 3].lambda, rows[m - 2].lambda, rows[m - 1].lambda);
    let (a, b) = (l1 - l2, l2 - l3);
    if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
        return None;
    }
    let target = a / b;
    let f = |q: f64| (d1.powf(q) - d2.powf(q)) / (d2.powf(q) - d3.powf(q)) - target;
    let (mut lo, mut hi) = (0.5, 2.0);
    if f(lo).signum() == f(hi).signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == f(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = 0.5 * (lo + hi);
    let c = b / (d2.powf(q) - d3.powf(q));
    let l = l3 - c * d3.powf(q);
    if m >= 4 {
        let (d0, l0) = (rows[m - 4].delta, rows[m - 4].lambda);
        let offset = c * d0.powf(q);
        if (l + offset - l0).abs() > 0.1 * offset.abs().max(1e-300) {
            return None;
        }
    }
    Some((l, q))
}

//! Elementary symmetric polynomials, Garding cones and the quantities built on them.
//!
//! Indices are zero-based throughout. `sigma(λ, 0)` is 1 by convention and is
//! accepted wherever a `σ_{k-1}` is needed with `k = 1`.

use crate::error::{Error, Result};

/// Binomial coefficient as a float. Exact for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for j in 0..k {
        c = c * (n - j) as f64 / (j + 1) as f64;
    }
    c.round()
}

/// A spectrum λ(H): finite values, at least one entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint(Vec<f64>);

impl SpectrumPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("spectrum must have at least one entry"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("spectrum entries must be finite"));
        }
        Ok(SpectrumPoint(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for SpectrumPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// All of σ_0..=σ_kmax by the prefix dynamic program.
///
/// After processing λ_1..λ_i, `e[j]` holds σ_j of that prefix. Each entry is a
/// sum of products, so integer inputs give exact results while they fit in 53 bits.
pub fn sigma_all(lambda: &[f64], kmax: usize) -> Vec<f64> {
    let kmax = kmax.min(lambda.len());
    let mut e = vec![0.0; kmax + 1];
    e[0] = 1.0;
    for (i, &l) in lambda.iter().enumerate() {
        let top = (i + 1).min(kmax);
        for j in (1..=top).rev() {
            e[j] += l * e[j - 1];
        }
    }
    e
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::param(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    Ok(())
}

/// σ_k(λ).
pub fn sigma(lambda: &[f64], k: usize) -> Result<f64> {
    check_k(lambda.len(), k)?;
    Ok(sigma_all(lambda, k)[k])
}

/// σ_{k;i}(λ): σ_k of λ with entry `i` removed. `k` may range over `0..=n`.
pub fn sigma_partial(lambda: &[f64], k: usize, i: usize) -> Result<f64> {
    let n = lambda.len();
    if k > n {
        return Err(Error::param(format!("k = {k} exceeds n = {n}")));
    }
    if i >= n {
        return Err(Error::param(format!("index {i} out of range for n = {n}")));
    }
    if k == n {
        return Ok(0.0);
    }
    let rest: Vec<f64> = lambda
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .collect();
    Ok(sigma_all(&rest, k)[k])
}

/// σ_{k;i}(λ) for every i at once.
pub fn sigma_partials(lambda: &[f64], k: usize) -> Vec<f64> {
    (0..lambda.len())
        .map(|i| sigma_partial(lambda, k, i).unwrap_or(0.0))
        .collect()
}

/// Largest k with σ_1..σ_k all strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConeMembership {
    pub k_max: usize,
}

impl ConeMembership {
    pub fn contains(&self, k: usize) -> bool {
        k <= self.k_max
    }
}

pub fn cone_classify(lambda: &[f64]) -> ConeMembership {
    let e = sigma_all(lambda, lambda.len());
    let k_max = e[1..].iter().take_while(|&&v| v > 0.0).count();
    ConeMembership { k_max }
}

pub fn in_cone(lambda: &[f64], k: usize) -> bool {
    let e = sigma_all(lambda, k);
    e[1..].iter().all(|&v| v > 0.0)
}

/// Symmetric matrix storing only the upper triangle, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    upper: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, upper: vec![0.0; n * (n + 1) / 2] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from full rows, averaging the two triangles.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::param("matrix rows must be square"));
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, 0.5 * (rows[i][j] + rows[j][i]));
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let p = self.idx(i, j);
        self.upper[p] = v;
    }

    pub fn scale(&self, c: f64) -> Self {
        SymMatrix { n: self.n, upper: self.upper.iter().map(|v| v * c).collect() }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Eigenvalues and eigenvectors (columns of `q`, row-major `q[i][j]`) by cyclic Jacobi.
    pub fn eigen(&self) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.n;
        let mut a = self.to_rows();
        let mut q = vec![vec![0.0; n]; n];
        for (i, row) in q.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum::<f64>()
                .sqrt();
            if off <= 1e-14 * scale {
                let vals = (0..n).map(|i| a[i][i]).collect();
                return Ok((vals, q));
            }
            for p in 0..n {
                for r in p + 1..n {
                    if a[p][r].abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (a[r][r] - a[p][p]) / (2.0 * a[p][r]);
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for row in a.iter_mut() {
                        let (x, y) = (row[p], row[r]);
                        row[p] = c * x - s * y;
                        row[r] = s * x + c * y;
                    }
                    for j in 0..n {
                        let (x, y) = (a[p][j], a[r][j]);
                        a[p][j] = c * x - s * y;
                        a[r][j] = s * x + c * y;
                    }
                    for row in q.iter_mut() {
                        let (x, y) = (row[p], row[r]);
                        row[p] = c * x - s * y;
                        row[r] = s * x + c * y;
                    }
                }
            }
        }
        Err(Error::numerical("Jacobi eigen-decomposition did not converge"))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigen()?.0)
    }

    /// Determinant via the eigenvalues.
    pub fn det(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().product())
    }
}

/// S_k(H) = σ_k(λ(H)).
pub fn hessian_sk(h: &SymMatrix, k: usize) -> Result<f64> {
    check_k(h.dim(), k)?;
    sigma(&h.eigenvalues()?, k)
}

/// S_k^{ij}(H) = Q diag(σ_{k-1;i}(λ)) Qᵀ.
///
/// For k = 1 the result is the identity for every H, so no cone check is made.
pub fn linearized_coeffs(h: &SymMatrix, k: usize) -> Result<SymMatrix> {
    let n = h.dim();
    check_k(n, k)?;
    if k == 1 {
        return Ok(SymMatrix::identity(n));
    }
    let (lam, q) = h.eigen()?;
    if !in_cone(&lam, k) {
        return Err(Error::Cone(format!("eigenvalues {lam:?} are not in Gamma_{k}")));
    }
    let d = sigma_partials(&lam, k - 1);
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..n).map(|m| q[i][m] * d[m] * q[j][m]).sum();
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// ρ_k(λ) = (σ_k(λ)/C(n,k))^{1/k}.
pub fn rho_k(lambda: &[f64], k: usize) -> Result<f64> {
    let n = lambda.len();
    check_k(n, k)?;
    if !in_cone(lambda, k) {
        return Err(Error::Cone(format!("{lambda:?} is not in Gamma_{k}")));
    }
    Ok((sigma(lambda, k)? / binomial(n, k)).powf(1.0 / k as f64))
}

/// ∇ρ_k and ∇²ρ_k at ξ ∈ Γ_k.
fn rho_derivs(xi: &[f64], k: usize) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let n = xi.len();
    let sk = sigma_all(xi, k)[k];
    let r = (sk / binomial(n, k)).powf(1.0 / k as f64);
    let ds = sigma_partials(xi, k - 1);
    let c = r / (k as f64 * sk);
    let grad = ds.iter().map(|d| c * d).collect();
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            // ∂²σ_k/∂ξ_i∂ξ_j is σ_{k−2} with entries i and j removed (zero on the diagonal).
            let d2 = if i == j || k < 2 {
                0.0
            } else {
                let rest: Vec<f64> = (0..n).filter(|&m| m != i && m != j).map(|m| xi[m]).collect();
                sigma_all(&rest, k - 2)[k - 2]
            };
            hess[i][j] = c * (d2 - (k as f64 - 1.0) / (k as f64 * sk) * ds[i] * ds[j]);
        }
    }
    (r, grad, hess)
}

/// ρ_k*(A) = inf{ λ(A)·ξ / n : ξ ∈ Γ_k, ρ_k(ξ) ≥ 1 }.
///
/// Sequential quadratic programming on the surface ρ_k = 1: each step solves the KKT
/// system of μ·ξ with the Hessian of the Lagrangian, backtracks to stay inside Γ_k and
/// decrease the objective, and pulls the iterate back by ξ ← ξ/ρ_k(ξ).
/// For k = 1 the feasible set is a half-space, so the infimum is finite only on the
/// ray of multiples of the identity.
pub fn rho_k_star(a: &SymMatrix, k: usize, tol: f64) -> Result<f64> {
    use faer::linalg::solvers::Solve;

    let n = a.dim();
    check_k(n, k)?;
    if !(tol > 0.0) {
        return Err(Error::param("tol must be positive"));
    }
    let mu = a.eigenvalues()?;
    let mu_norm = mu.iter().map(|v| v * v).sum::<f64>().sqrt();
    if mu_norm == 0.0 {
        return Err(Error::DualCone("zero matrix".into()));
    }
    let obj = |xi: &[f64]| mu.iter().zip(xi).map(|(m, x)| m * x).sum::<f64>() / n as f64;
    if k == 1 {
        let mean = mu.iter().sum::<f64>() / n as f64;
        if mu.iter().any(|m| (m - mean).abs() > 1e-12 * mu_norm) || mean < 0.0 {
            return Err(Error::DualCone("for k = 1 only nonnegative multiples of the identity are in the dual cone".into()));
        }
        return Ok(mean);
    }

    let mut xi = vec![1.0; n];
    let mut f = obj(&xi);
    for _ in 0..500 {
        if f < 0.0 {
            return Err(Error::DualCone(format!("objective negative at xi = {xi:?}")));
        }
        let (_, g, h) = rho_derivs(&xi, k);
        // μ = ν ∇ρ at the optimum, with ν = μ·ξ since ∇ρ·ξ = ρ = 1.
        let nu = n as f64 * f;
        let kkt = mu.iter().zip(&g).map(|(m, gi)| (m - nu * gi).powi(2)).sum::<f64>().sqrt();
        if kkt <= tol * mu_norm {
            return Ok(f);
        }
        let hscale = h.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let m = faer::Mat::<f64>::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
            (true, true) => -nu * h[i][j] + if i == j { 1e-12 * nu * hscale } else { 0.0 },
            (true, false) => -g[i],
            (false, true) => g[j],
            (false, false) => 0.0,
        });
        let rhs = faer::Mat::<f64>::from_fn(n + 1, 1, |i, _| if i < n { -mu[i] } else { 0.0 });
        let sol = m.partial_piv_lu().solve(&rhs);
        let d: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("rho_k_star: singular KKT system"));
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-14 {
            let cand: Vec<f64> = xi.iter().zip(&d).map(|(x, v)| x + alpha * v).collect();
            if in_cone(&cand, k) {
                let r = rho_k(&cand, k)?;
                let cand: Vec<f64> = cand.iter().map(|v| v / r).collect();
                let fc = obj(&cand);
                if fc < f {
                    xi = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            // No further decrease at this precision.
            return Ok(f);
        }
        if xi.iter().map(|v| v * v).sum::<f64>().sqrt() > 1e8 {
            return Err(Error::DualCone("objective unbounded below on the feasible set".into()));
        }
    }
    Err(Error::numerical("rho_k_star did not converge"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(&[1.0, 1.0, 1.0], 2).unwrap(), 3.0);
        assert_eq!(sigma(&[1.0, 2.0, 3.0], 2).unwrap(), 11.0);
        assert_eq!(sigma(&[3.0, -1.0, 2.0, 5.0], 3).unwrap(), -1.0);
        assert!(matches!(sigma(&[1.0], 2), Err(Error::Param(_))));
        assert!(matches!(sigma(&[1.0], 0), Err(Error::Param(_))));
    }

    #[test]
    fn sigma_partial_examples() {
        assert_eq!(sigma_partial(&[1.0, 2.0, 3.0], 1, 0).unwrap(), 5.0);
        assert_eq!(sigma_partial(&[1.0, 1.0, 1.0], 2, 2).unwrap(), 1.0);
        // pairs of (2, -1, 4): -2 + 8 - 4
        assert_eq!(sigma_partial(&[2.0, 5.0, -1.0, 4.0], 2, 1).unwrap(), 2.0);
        assert_eq!(sigma_partial(&[2.0, 5.0], 0, 1).unwrap(), 1.0);
    }

    #[test]
    fn cone_examples() {
        assert_eq!(cone_classify(&[1.0, 1.0, 1.0]).k_max, 3);
        assert_eq!(cone_classify(&[2.0, 2.0, -1.0]).k_max, 1);
        assert_eq!(cone_classify(&[1.0, 1.0, -0.4]).k_max, 2);
        assert_eq!(cone_classify(&[-1.0, 0.5]).k_max, 0);
        assert!(cone_classify(&[1.0, 1.0, -0.4]).contains(2));
    }

    #[test]
    fn hessian_sk_examples() {
        assert!(close(hessian_sk(&SymMatrix::identity(3), 2).unwrap(), 3.0, 1e-14));
        assert!(close(hessian_sk(&SymMatrix::diag(&[1.0, 2.0, 3.0]), 3).unwrap(), 6.0, 1e-14));
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!(close(hessian_sk(&m, 2).unwrap(), 3.0, 1e-13));
    }

    #[test]
    fn linearized_examples() {
        let h = SymMatrix::from_rows(&[vec![-3.0, 1.0], vec![1.0, 0.5]]).unwrap();
        assert_eq!(linearized_coeffs(&h, 1).unwrap(), SymMatrix::identity(2));

        let (a, b, c) = (2.0, 0.3, 1.5);
        let h = SymMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap();
        let l = linearized_coeffs(&h, 2).unwrap();
        assert!(close(l.get(0, 0), c, 1e-13));
        assert!(close(l.get(0, 1), -b, 1e-13));
        assert!(close(l.get(1, 1), a, 1e-13));

        let l = linearized_coeffs(&SymMatrix::diag(&[1.0, 2.0, 3.0]), 2).unwrap();
        for (i, want) in [5.0, 4.0, 3.0].into_iter().enumerate() {
            assert!(close(l.get(i, i), want, 1e-14));
        }

        let bad = SymMatrix::diag(&[1.0, -2.0]);
        assert!(matches!(linearized_coeffs(&bad, 2), Err(Error::Cone(_))));
    }

    #[test]
    fn rho_examples() {
        assert!(close(rho_k(&[1.0, 1.0, 1.0], 2).unwrap(), 1.0, 1e-15));
        assert!(close(rho_k(&[2.5; 4], 3).unwrap(), 2.5, 1e-14));
        assert!(close(rho_k(&[1.0, 2.0, 3.0], 2).unwrap(), (11.0f64 / 3.0).sqrt(), 1e-14));
        assert!(matches!(rho_k(&[1.0, -2.0], 2), Err(Error::Cone(_))));
    }

    #[test]
    fn rho_star_examples() {
        for k in 1..=3 {
            assert!(close(rho_k_star(&SymMatrix::identity(3), k, 1e-10).unwrap(), 1.0, 1e-9));
            assert!(close(rho_k_star(&SymMatrix::identity(3).scale(2.5), k, 1e-10).unwrap(), 2.5, 1e-9));
        }
        let v = rho_k_star(&SymMatrix::diag(&[2.0, 1.0]), 2, 1e-10).unwrap();
        // grid search over xi1 * xi2 = 1
        let grid = (1..200_000)
            .map(|i| i as f64 * 1e-4)
            .map(|x| (2.0 * x + 1.0 / x) / 2.0)
            .fold(f64::INFINITY, f64::min);
        assert!((v - grid).abs() < 1e-6, "{v} vs {grid}");
        assert!((v - 2f64.sqrt()).abs() < 1e-7);
    }

    #[test]
    fn rho_star_rejects_outside_dual_cone() {
        let r = rho_k_star(&SymMatrix::diag(&[1.0, -1.0]), 1, 1e-8);
        assert!(matches!(r, Err(Error::DualCone(_))), "{r:?}");
    }

    #[test]
    fn jacobi_reconstructs() {
        let m = SymMatrix::from_rows(&[
            vec![4.0, 1.0, -2.0],
            vec![1.0, 2.0, 0.5],
            vec![-2.0, 0.5, -3.0],
        ])
        .unwrap();
        let (vals, q) = m.eigen().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let r: f64 = (0..3).map(|p| q[i][p] * vals[p] * q[j][p]).sum();
                assert!((r - m.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(7, 0), 1.0);
    }
}

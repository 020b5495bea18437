use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DomainDescriptor;

/// Iteration limits and tolerances shared by the grid solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Maximum Picard iterations per λ.
    pub picard_max: usize,
    /// Picard stops when ‖u_{m+1} − u_m‖∞ ≤ picard_tol · max(1, ‖u‖∞).
    pub picard_tol: f64,
    /// Blow-up when min u < −blowup_cap.
    pub blowup_cap: f64,
    /// Blow-up when ‖u‖∞ more than doubles for this many consecutive iterations.
    pub doubling_window: usize,
    /// Consecutive iterations the nodewise increment ratios must stay on one side of 1.
    pub ratio_window: usize,
    /// Relative width of the final λ bracket.
    pub lambda_tol: f64,
    /// Largest λ tried before giving up on finding blow-up.
    pub lambda_ceiling: f64,
    /// Monge–Ampère inner iteration cap and relative tolerance.
    pub inner_max: usize,
    pub inner_tol: f64,
    /// Inverse power iteration tolerance on the normalized field.
    pub power_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            picard_max: 600,
            picard_tol: 1e-10,
            blowup_cap: 1e6,
            doubling_window: 25,
            ratio_window: 3,
            lambda_tol: 1e-4,
            lambda_ceiling: 1e6,
            inner_max: 2000,
            inner_tol: 1e-10,
            power_tol: 1e-8,
        }
    }
}

/// Everything that defines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: usize,
    pub k: usize,
    pub s: f64,
    pub delta: f64,
    pub domain: DomainDescriptor,
    pub h: f64,
    #[serde(default)]
    pub solver: SolverParams,
}

impl ProblemSpec {
    pub fn new(n: usize, k: usize, s: f64, delta: f64, domain: DomainDescriptor, h: f64) -> Self {
        ProblemSpec { n, k, s, delta, domain, h, solver: SolverParams::default() }
    }

    /// s₀ = min(1, n/2k); admissible weights need s > −s₀.
    pub fn s0(n: usize, k: usize) -> f64 {
        1f64.min(n as f64 / (2.0 * k as f64))
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(Error::param(format!("need 1 <= k <= n, got n = {}, k = {}", self.n, self.k)));
        }
        let s0 = Self::s0(self.n, self.k);
        if !(self.s > -s0) || !self.s.is_finite() {
            return Err(Error::param(format!("s = {} violates s > -min(1, n/2k) = {}", self.s, -s0)));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::param("delta must be >= 0"));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::param("h must be positive"));
        }
        self.domain.validate()
    }

    /// Extra requirements of the 2-D grid solvers.
    pub fn validate_grid(&self) -> Result<()> {
        self.validate()?;
        if self.n != 2 {
            return Err(Error::param(format!("grid solvers are 2-D; got n = {}", self.n)));
        }
        if self.k != 1 && self.k != 2 {
            return Err(Error::param(format!("grid solvers support k = 1 or 2; got k = {}", self.k)));
        }
        if self.s < 0.0 && self.delta == 0.0 {
            return Err(Error::param("s < 0 needs delta > 0 on the grid (weight is infinite at the origin node)"));
        }
        Ok(())
    }

    /// Regularized weight (|x|² + δ²)^s.
    pub fn weight(&self, x: f64, y: f64) -> f64 {
        let r2 = x * x + y * y + self.delta * self.delta;
        if self.s == 0.0 {
            1.0
        } else {
            r2.powf(self.s)
        }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        ProblemSpec { delta, ..self.clone() }
    }

    pub fn with_domain(&self, domain: DomainDescriptor) -> Self {
        ProblemSpec { domain, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> DomainDescriptor {
        DomainDescriptor::Disk { radius: 1.0 }
    }

    #[test]
    fn validation() {
        assert!(ProblemSpec::new(2, 1, 0.0, 0.0, disk(), 0.1).validate_grid().is_ok());
        assert!(ProblemSpec::new(2, 2, -0.9, 0.1, disk(), 0.1).validate().is_err());
        assert!(ProblemSpec::new(2, 2, -0.4, 0.1, disk(), 0.1).validate().is_ok());
        assert!(ProblemSpec::new(2, 1, -0.25, 0.0, disk(), 0.1).validate_grid().is_err());
        assert!(ProblemSpec::new(3, 2, 0.0, 0.0, disk(), 0.1).validate_grid().is_err());
        assert!(ProblemSpec::new(2, 3, 0.0, 0.0, disk(), 0.1).validate().is_err());
    }

    #[test]
    fn weight_regularized() {
        let p = ProblemSpec::new(2, 1, -0.5, 0.5, disk(), 0.1);
        assert!((p.weight(0.0, 0.0) - 2.0).abs() < 1e-15);
        let p = ProblemSpec::new(2, 1, 0.0, 0.0, disk(), 0.1);
        assert_eq!(p.weight(0.0, 0.0), 1.0);
    }
}

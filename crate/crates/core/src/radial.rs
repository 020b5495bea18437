//! Radial oracles on balls: ODE marching for general k and the Bessel closed form for k = 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symfun::binomial;

/// S_k of a radial function from u′ and u″ at radius r.
pub fn radial_sk(du: f64, ddu: f64, r: f64, n: usize, k: usize) -> f64 {
    let q = du / r;
    let c1 = binomial(n - 1, k);
    let c2 = if k >= 1 { binomial(n - 1, k - 1) } else { 0.0 };
    c1 * q.powi(k as i32) + c2 * ddu * q.powi(k as i32 - 1)
}

/// Sampled radial profile on [r_min, R], ending at the zero u(R) = 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radius: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub ddu: Vec<f64>,
}

impl RadialProfile {
    /// Cubic Hermite interpolation of (u, u′). Beyond R the value is 0; below r_min it is u(r_min).
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let last = self.r.len() - 1;
        if r >= self.r[last] {
            return (0.0, self.du[last]);
        }
        if r <= self.r[0] {
            return (self.u[0], self.du[0]);
        }
        let j = self.r.partition_point(|&x| x <= r) - 1;
        hermite(self.r[j], self.r[j + 1], self.u[j], self.u[j + 1], self.du[j], self.du[j + 1], r)
    }

    /// min u; equals u(r_min) = −1 for shooting profiles.
    pub fn min_value(&self) -> f64 {
        self.u.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// sup r·u′(r).
    pub fn sup_weighted_gradient(&self) -> f64 {
        self.r.iter().zip(&self.du).map(|(r, d)| r * d).fold(0.0, f64::max)
    }
}

fn hermite(r0: f64, r1: f64, u0: f64, u1: f64, d0: f64, d1: f64, r: f64) -> (f64, f64) {
    let h = r1 - r0;
    let t = (r - r0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let u = h00 * u0 + h10 * h * d0 + h01 * u1 + h11 * h * d1;
    let dh00 = (6.0 * t2 - 6.0 * t) / h;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = (-6.0 * t2 + 6.0 * t) / h;
    let dh11 = 3.0 * t2 - 2.0 * t;
    (u, dh00 * u0 + dh10 * d0 + dh01 * u1 + dh11 * d1)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialEigen {
    pub lambda1: f64,
    pub profile: RadialProfile,
    pub bisection_width: f64,
    /// Zero radii of the test shots decreased strictly in λ.
    pub bracket_monotone: bool,
    /// Fitted exponent e in u′(r) ~ r^e near the origin. Recorded, not asserted.
    pub origin_gradient_exponent: f64,
}

const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Gauss–Legendre nodes and weights (8 points) mapped to [a, b].
pub(crate) fn gauss8(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let (m, hw) = (0.5 * (a + b), 0.5 * (b - a));
    GL8_X.iter().zip(GL8_W.iter()).map(move |(x, w)| (m + hw * x, hw * w))
}

/// ∫_{r0}^{r1} t^e · (linear interpolant of f0, f1) dt.
///
/// Cells touching the origin use exact moments of t^e; elsewhere t^e is smooth
/// on the cell and 8-point Gauss–Legendre is accurate to rounding.
fn cell_integral(r0: f64, r1: f64, e: f64, f0: f64, f1: f64) -> f64 {
    let h = r1 - r0;
    if r0 < h {
        let m0 = (r1.powf(e + 1.0) - r0.powf(e + 1.0)) / (e + 1.0);
        let m1 = (r1.powf(e + 2.0) - r0.powf(e + 2.0)) / (e + 2.0) - r0 * m0;
        f0 * m0 + (f1 - f0) * m1 / h
    } else {
        gauss8(r0, r1)
            .map(|(t, w)| w * t.powf(e) * (f0 + (f1 - f0) * (t - r0) / h))
            .sum()
    }
}

struct Shot {
    r: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    /// First zero of u, if it occurred before the stopping radius.
    zero: Option<(f64, f64)>,
}

struct Marcher {
    n: usize,
    k: usize,
    s: f64,
    radius: f64,
    steps: usize,
}

impl Marcher {
    fn a(&self) -> f64 {
        self.n as f64 - 1.0 + 2.0 * self.s * self.k as f64
    }

    fn b(&self) -> f64 {
        1.0 + 2.0 * self.s
    }

    /// Marches u′ = r^b v(r), v = [(k/C) I(r) / r^{a+1}]^{1/k}, with
    /// I(r) = ∫₀^r t^a (λ|u|)^k dt, until u reaches 0 or r exceeds `r_stop`.
    fn shoot(&self, lambda: f64, r_stop: f64) -> Shot {
        let (n, k) = (self.n, self.k);
        let kf = k as f64;
        let c = kf / binomial(n - 1, k - 1);
        let (a, b) = (self.a(), self.b());
        let h = self.radius / self.steps as f64;
        let r_min = 1e-8 * self.radius;

        let g_of = |u: f64| (lambda * (-u).max(0.0)).powi(k as i32);
        let v_of = |i: f64, r: f64| (c * i / r.powf(a + 1.0)).max(0.0).powf(1.0 / kf);

        let mut rs = vec![r_min];
        let mut us = vec![-1.0];
        let mut integral = g_of(-1.0) * r_min.powf(a + 1.0) / (a + 1.0);
        let mut v = v_of(integral, r_min);
        let mut dus = vec![r_min.powf(b) * v];
        let mut g = g_of(-1.0);

        let mut j = 1usize;
        loop {
            let r0 = *rs.last().unwrap();
            let r1 = j as f64 * h;
            let u0 = *us.last().unwrap();
            let mut v1 = v;
            let (mut u1, mut i1, mut g1) = (u0, integral, g);
            for _ in 0..4 {
                u1 = u0 + cell_integral(r0, r1, b, v, v1);
                g1 = g_of(u1);
                i1 = integral + cell_integral(r0, r1, a, g, g1);
                v1 = v_of(i1, r1);
            }
            let du1 = r1.powf(b) * v1;
            if u1 >= 0.0 {
                let du0 = *dus.last().unwrap();
                let zero = hermite_zero(r0, r1, u0, u1, du0, du1);
                rs.push(r1);
                us.push(u1);
                dus.push(du1);
                return Shot { r: rs, u: us, du: dus, zero: Some(zero) };
            }
            rs.push(r1);
            us.push(u1);
            dus.push(du1);
            v = v1;
            integral = i1;
            g = g1;
            if r1 >= r_stop * (1.0 - 1e-12) {
                return Shot { r: rs, u: us, du: dus, zero: None };
            }
            j += 1;
        }
    }

    fn zero_inside(&self, lambda: f64) -> bool {
        self.shoot(lambda, self.radius).zero.is_some()
    }
}

/// Zero of the cubic Hermite interpolant on [r0, r1] with u0 < 0 ≤ u1; returns (r, u′(r)).
fn hermite_zero(r0: f64, r1: f64, u0: f64, u1: f64, d0: f64, d1: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (r0, r1);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if hermite(r0, r1, u0, u1, d0, d1, mid).0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    (r, hermite(r0, r1, u0, u1, d0, d1, r).1)
}

fn check_radial_params(n: usize, k: usize, s: f64, radius: f64) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::param(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
    }
    if n as f64 + 2.0 * s * k as f64 <= 0.0 {
        return Err(Error::param(format!("weight not integrable: n + 2sk = {} <= 0", n as f64 + 2.0 * s * k as f64)));
    }
    let s0 = 1f64.min(n as f64 / (2.0 * k as f64));
    if s <= -s0 {
        return Err(Error::param(format!("s = {s} must exceed -min(1, n/2k) = {}", -s0)));
    }
    if !(radius > 0.0) {
        return Err(Error::param("radius must be positive"));
    }
    Ok(())
}

/// Default number of marching steps on [0, R].
pub const DEFAULT_STEPS: usize = 4096;

/// Principal eigenvalue on the ball B_R by shooting with u(0) = −1.
pub fn shoot_eigen(n: usize, k: usize, s: f64, radius: f64, tol: f64) -> Result<RadialEigen> {
    shoot_eigen_steps(n, k, s, radius, tol, DEFAULT_STEPS)
}

/// As [`shoot_eigen`] with an explicit number of steps on [0, R].
pub fn shoot_eigen_steps(n: usize, k: usize, s: f64, radius: f64, tol: f64, steps: usize) -> Result<RadialEigen> {
    check_radial_params(n, k, s, radius)?;
    if !(tol > 0.0) {
        return Err(Error::param("tol must be positive"));
    }
    if steps < 8 {
        return Err(Error::param("need at least 8 marching steps"));
    }
    let m = Marcher { n, k, s, radius, steps };
    let n_eff = (n as f64).max(2.0) as usize;
    let est = bessel_weighted_eigen(n_eff, s, radius, 1e-10).unwrap_or(radius.powf(-2.0 * (1.0 + s)));
    let (mut lo, mut hi) = (0.1 * est, 10.0 * est);

    let mut tries = 0;
    while m.zero_inside(lo) {
        lo *= 0.5;
        tries += 1;
        if tries > 20 {
            return Err(Error::Bracket(format!("zero stays inside R down to lambda = {lo:e}")));
        }
    }
    tries = 0;
    while !m.zero_inside(hi) {
        hi *= 2.0;
        tries += 1;
        if tries > 20 {
            return Err(Error::Bracket(format!("no zero inside R up to lambda = {hi:e}")));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if m.zero_inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let width = hi - lo;
    let mid = 0.5 * (lo + hi);

    // Final shot past R; homogeneity moves the computed zero exactly onto R.
    let shot = m.shoot(mid, 4.0 * radius);
    let (r0, du0) = shot
        .zero
        .ok_or_else(|| Error::Bracket("final shot has no zero".into()))?;
    let c = r0 / radius;
    let lambda1 = mid * c.powf(2.0 * (1.0 + s));

    let mut r = Vec::with_capacity(shot.r.len());
    let mut u = Vec::with_capacity(shot.r.len());
    let mut du = Vec::with_capacity(shot.r.len());
    for i in 0..shot.r.len() {
        if shot.r[i] >= r0 * (1.0 - 1e-12) {
            break;
        }
        r.push(shot.r[i] / c);
        u.push(shot.u[i]);
        du.push(shot.du[i] * c);
    }
    if let Some(&last) = r.last() {
        if radius - last < 1e-9 * radius {
            r.pop();
            u.pop();
            du.pop();
        }
    }
    r.push(radius);
    u.push(0.0);
    du.push(du0 * c);
    // Second derivative from the equation itself.
    let cn1 = binomial(n - 1, k);
    let cn2 = binomial(n - 1, k - 1);
    let ddu = r
        .iter()
        .zip(&u)
        .zip(&du)
        .map(|((&rr, &uu), &d)| {
            let q = d / rr;
            let rhs = (rr.powf(2.0 * s) * lambda1 * (-uu).max(0.0)).powi(k as i32);
            if q <= 0.0 {
                return 0.0;
            }
            (rhs - cn1 * q.powi(k as i32)) / (cn2 * q.powi(k as i32 - 1))
        })
        .collect();
    let profile = RadialProfile { radius, r, u, du, ddu };

    let zeros: Vec<f64> = [0.5, 0.75, 1.0, 1.5, 2.0]
        .iter()
        .filter_map(|f| m.shoot(f * mid, 8.0 * radius).zero.map(|z| z.0))
        .collect();
    let bracket_monotone = zeros.len() == 5 && zeros.windows(2).all(|w| w[1] < w[0]);

    let origin_gradient_exponent = fit_origin_exponent(&profile);
    Ok(RadialEigen { lambda1, profile, bisection_width: width, bracket_monotone, origin_gradient_exponent })
}

fn fit_origin_exponent(p: &RadialProfile) -> f64 {
    let sample = |target: f64| {
        let j = p.r.partition_point(|&x| x < target).min(p.r.len() - 1);
        (p.r[j], p.du[j])
    };
    let (r1, d1) = sample(0.01 * p.radius);
    let (r2, d2) = sample(0.05 * p.radius);
    (d2.ln() - d1.ln()) / (r2.ln() - r1.ln())
}

/// Scaled Bessel series g(x) = Σ (−x²/4)^m / (m! (ν+1)_m), so J_ν(x) ∝ x^ν g(x).
fn bessel_scaled(nu: f64, x: f64) -> (f64, f64) {
    let z = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut big = 1.0f64;
    for m in 1..500 {
        let mf = m as f64;
        term *= z / (mf * (nu + mf));
        sum += term;
        big = big.max(term.abs());
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && mf > 0.5 * x {
            break;
        }
    }
    (sum, big)
}

/// First positive zero j_{ν,1} of J_ν.
pub fn bessel_first_zero(nu: f64, tol: f64) -> Result<f64> {
    if !(nu > -1.0) {
        return Err(Error::param("Bessel order must exceed -1"));
    }
    let mut x0 = 0.0;
    let mut g0 = 1.0;
    let mut x = 0.1;
    while x < 200.0 {
        let (g, big) = bessel_scaled(nu, x);
        if big > 1e8 {
            return Err(Error::numerical(format!("Bessel series lost precision at x = {x}")));
        }
        if g <= 0.0 && g0 > 0.0 {
            let (mut lo, mut hi) = (x0, x);
            while hi - lo > tol * hi {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if bessel_scaled(nu, mid).0 > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        x0 = x;
        g0 = g;
        x += 0.1;
    }
    Err(Error::numerical("no sign change of the Bessel series below x = 200"))
}

/// λ₁ for k = 1 on B_R: ((1+s) j_{ν,1})² / R^{2(1+s)}, ν = (n−2)/(2(1+s)).
pub fn bessel_weighted_eigen(n: usize, s: f64, radius: f64, tol: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::param("need n >= 2"));
    }
    if !(s > -1.0) {
        return Err(Error::param("need s > -1"));
    }
    if !(radius > 0.0) || !(tol > 0.0) {
        return Err(Error::param("radius and tol must be positive"));
    }
    let nu = (n as f64 - 2.0) / (2.0 * (1.0 + s));
    let j = bessel_first_zero(nu, tol.min(1e-6) * 1e-3)?;
    Ok(((1.0 + s) * j).powi(2) / radius.powf(2.0 * (1.0 + s)))
}

#![allow(dead_code)]

use hesseig::symfun::{sigma_all, SymMatrix};
use rand::Rng;

/// μ + t·(1,…,1) with t just past the smallest shift that enters Γ_k, plus `extra`.
pub fn shift_into_cone(mu: &[f64], k: usize, extra: f64) -> Vec<f64> {
    let scale = mu.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let inside = |t: f64| {
        let l: Vec<f64> = mu.iter().map(|v| v + t).collect();
        sigma_all(&l, k)[1..].iter().all(|&s| s > 0.0)
    };
    let (mut lo, mut hi) = (-2.0 * scale, 2.0 * scale);
    debug_assert!(!inside(lo) && inside(hi));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = hi + extra + 1e-6 * scale;
    mu.iter().map(|v| v + t).collect()
}

/// A point of Γ_k, often close to its boundary.
pub fn cone_point(rng: &mut impl Rng, n: usize, k: usize) -> Vec<f64> {
    let mu: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let extra = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..2.0) };
    let c: f64 = rng.gen_range(0.1..10.0);
    shift_into_cone(&mu, k, extra).into_iter().map(|v| c * v).collect()
}

pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for b in &q {
                let d: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                for (a, c) in v.iter_mut().zip(b) {
                    *a -= d * c;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-3 {
            q.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    q
}

/// Q diag(λ) Qᵀ for a random orthogonal Q.
pub fn rotated(rng: &mut impl Rng, lambda: &[f64]) -> SymMatrix {
    let n = lambda.len();
    let q = random_orthogonal(rng, n);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|m| q[m][i] * lambda[m] * q[m][j]).sum()).collect())
        .collect();
    SymMatrix::from_rows(&rows).unwrap()
}

/// σ_k by enumerating all k-subsets.
pub fn subset_sigma(lambda: &[f64], k: usize) -> f64 {
    let n = lambda.len();
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| lambda[i]).product::<f64>())
        .sum()
}

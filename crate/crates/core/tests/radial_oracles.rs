use hesseig::radial::{bessel_weighted_eigen, radial_sk, shoot_eigen, shoot_eigen_steps};
use hesseig::symfun::{binomial, in_cone};

#[test]
fn shooting_matches_bessel_closed_form() {
    for n in [2usize, 3] {
        for s in [-0.25, 0.0, 0.5] {
            let shot = shoot_eigen(n, 1, s, 1.0, 1e-9).unwrap();
            let exact = bessel_weighted_eigen(n, s, 1.0, 1e-12).unwrap();
            let rel = (shot.lambda1 - exact).abs() / exact;
            assert!(rel < 1e-6, "n={n} s={s}: {} vs {exact} (rel {rel:e})", shot.lambda1);
        }
    }
}

#[test]
fn refinement_order_at_least_one() {
    for (n, k, s) in [(2usize, 1usize, 0.0), (2, 2, -0.25), (3, 2, 0.5)] {
        let l: Vec<f64> = [128usize, 256, 512]
            .iter()
            .map(|&m| shoot_eigen_steps(n, k, s, 1.0, 1e-12, m).unwrap().lambda1)
            .collect();
        let d1 = (l[0] - l[1]).abs();
        let d2 = (l[1] - l[2]).abs();
        assert!(d1 >= 2.0 * d2, "n={n} k={k} s={s}: {d1:e} then {d2:e}");
    }
}

#[test]
fn profiles_stay_admissible() {
    for (n, k, s) in [(2usize, 2usize, 0.0), (3, 2, -0.25), (3, 3, 0.5), (4, 2, 0.0)] {
        let e = shoot_eigen(n, k, s, 1.0, 1e-8).unwrap();
        let p = &e.profile;
        for i in 1..p.r.len() - 1 {
            let mut lam = vec![p.du[i] / p.r[i]; n - 1];
            lam.push(p.ddu[i]);
            assert!(in_cone(&lam, k), "n={n} k={k} s={s} r={}: {lam:?}", p.r[i]);
        }
    }
}

#[test]
fn divergence_form_consistency() {
    // u = -cos(r) on [0.2, 1]: compare the pointwise form with a centred difference
    // of r^{n-k} (u')^k.
    let (n, k) = (3usize, 2usize);
    let c = binomial(n - 1, k - 1) / k as f64;
    let flux = |r: f64| r.powi((n - k) as i32) * r.sin().powi(k as i32);
    let mut errs = Vec::new();
    for h in [1e-2, 5e-3] {
        let mut e: f64 = 0.0;
        for i in 0..20 {
            let r = 0.2 + 0.04 * i as f64;
            let exact = radial_sk(r.sin(), r.cos(), r, n, k);
            let fd = c * r.powi(1 - n as i32) * (flux(r + h) - flux(r - h)) / (2.0 * h);
            e = e.max((exact - fd).abs());
        }
        errs.push(e);
    }
    assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
}

#[test]
fn weighted_gradient_stable_for_negative_s() {
    for s in [-0.25, -0.4] {
        let a = shoot_eigen_steps(2, 1, s, 1.0, 1e-10, 1024).unwrap();
        let b = shoot_eigen_steps(2, 1, s, 1.0, 1e-10, 4096).unwrap();
        let (ka, kb) = (a.profile.sup_weighted_gradient(), b.profile.sup_weighted_gradient());
        assert!(ka.is_finite() && (ka - kb).abs() < 1e-3 * kb, "{ka} vs {kb}");
    }
}

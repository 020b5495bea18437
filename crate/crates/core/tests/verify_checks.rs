use hesseig::eigensolve::find_lambda_delta;
use hesseig::grid::{DomainDescriptor, Grid};
use hesseig::problem::ProblemSpec;
use hesseig::radial::bessel_weighted_eigen;
use hesseig::verify::*;
use proptest::prelude::*;

const DISK: DomainDescriptor = DomainDescriptor::Disk { radius: 1.0 };

#[test]
fn fundamental_residual_all_dimensions() {
    let radii: Vec<f64> = (0..12).map(|i| 0.25 * 1.25f64.powi(i)).collect();
    for n in 2..=5 {
        for k in 1..=n {
            let r = fundamental_residual(n, k, &radii).unwrap();
            assert!(r <= 1e-10, "n={n} k={k}: {r}");
        }
    }
}

#[test]
fn fundamental_solution_cases() {
    assert_eq!(fundamental_solution(1.0, 3, 2), 1.0);
    assert_eq!(fundamental_solution(1.0, 4, 2), 0.0);
    assert!((fundamental_solution(2.0, 4, 1) + 0.25).abs() < 1e-15);
    assert!((fundamental_solution(4.0, 3, 2) - 2.0).abs() < 1e-14);
    assert_eq!(fundamental_solution(0.0, 4, 2), f64::NEG_INFINITY);
}

#[test]
fn wolff_matches_power_rule() {
    // μ(B_t) = c t^{n+2sk} with n = 3, k = 2, s = −1/4 gives the integrand c^{1/2} t^{1/2}.
    for (c, r) in [(1.0, 1.0), (2.5, 0.6), (0.3, 1.7)] {
        match wolff_potential(|t: f64| c * t * t, 3, 2, r).unwrap() {
            WolffValue::Finite(w) => {
                let exact = c.sqrt() * r.powf(1.5) / 1.5;
                assert!((w - exact).abs() <= 1e-6 * exact, "{w} vs {exact}");
            }
            WolffValue::Divergent => panic!("spurious divergence"),
        }
    }
    let ball = |t: f64| 4.0 * std::f64::consts::PI / 3.0 * t.powi(3);
    let WolffValue::Finite(w) = wolff_potential(ball, 3, 2, 0.8).unwrap() else { panic!() };
    assert!((w - (4.0 * std::f64::consts::PI / 3.0).sqrt() * 0.32).abs() < 1e-9);
    assert_eq!(wolff_potential(|_| 0.0, 3, 2, 1.0).unwrap(), WolffValue::Finite(0.0));
    assert!(wolff_potential(|t| t, 4, 2, 1.0).is_err());
}

#[test]
fn linearized_laplacian_matches_bessel() {
    let h = 1.0 / 64.0;
    let g = Grid::new(DISK, h).unwrap();
    let u = g.to_field(&g.from_fn(|x, y| 0.5 * (x * x + y * y - 1.0)));

    let spec = ProblemSpec::new(2, 1, 0.0, 0.0, DISK, h);
    let lin = linearized_eigen(&u, &spec).unwrap();
    let exact = bessel_weighted_eigen(2, 0.0, 1.0, 1e-12).unwrap();
    assert!((lin.lambda_phi / exact - 1.0).abs() < 2e-3, "{}", lin.lambda_phi);
    assert!(lin.one_signed);

    let spec = ProblemSpec::new(2, 1, -0.25, 0.01, DISK, h);
    let lin = linearized_eigen(&u, &spec).unwrap();
    let exact = bessel_weighted_eigen(2, -0.25, 1.0, 1e-12).unwrap();
    assert!((lin.lambda_phi / exact - 1.0).abs() < 0.02, "{} vs {exact}", lin.lambda_phi);
    assert!(lin.one_signed);
}

#[test]
fn linearized_monge_ampere_on_paraboloid() {
    // D²u = I: cofactor coefficients are the identity and the multiplier k S_k^{(k-1)/k} is 2,
    // so the Laplacian eigenvalue comes back halved.
    let h = 1.0 / 32.0;
    let g = Grid::new(DISK, h).unwrap();
    let u = g.to_field(&g.from_fn(|x, y| 0.5 * (x * x + y * y - 1.0)));
    let lin = linearized_eigen(&u, &ProblemSpec::new(2, 2, 0.0, 0.0, DISK, h)).unwrap();
    assert!((2.0 * lin.lambda_phi / 5.783186 - 1.0).abs() < 5e-3, "{}", lin.lambda_phi);
    assert!(lin.one_signed);
}

#[test]
fn slope_on_paraboloid_and_zero() {
    let h = 1.0 / 32.0;
    let g = Grid::new(DISK, h).unwrap();
    let spec = ProblemSpec::new(2, 1, 0.0, 0.0, DISK, h);
    let u = g.to_field(&g.from_fn(|x, y| 0.5 * (x * x + y * y - 1.0)));
    let c = boundary_slope_check(&u, &spec).unwrap();
    assert!(!c.degenerate && (c.min_ratio - 1.0).abs() < 0.05, "{}", c.min_ratio);
    let z = g.to_field(&vec![0.0; g.unknowns()]);
    let c = boundary_slope_check(&z, &spec).unwrap();
    assert!(c.degenerate && c.min_ratio == 0.0);
}

#[test]
fn computed_eigenfunction_has_positive_slope() {
    let spec = ProblemSpec::new(2, 1, 0.5, 0.0, DISK, 1.0 / 32.0);
    let (_, e) = find_lambda_delta(&spec).unwrap();
    let c = boundary_slope_check(&e.field, &spec).unwrap();
    assert!(!c.degenerate && c.min_ratio > 0.0);
}

#[test]
fn scaling_law_within_two_percent() {
    for (s, delta) in [(0.0, 0.0), (-0.25, 0.1)] {
        let spec = ProblemSpec::new(2, 1, s, delta, DISK, 1.0 / 32.0);
        let (ratio, expected) = scaling_law_check(&spec, 2.0).unwrap();
        assert!((ratio / expected - 1.0).abs() < 0.02, "s={s}: {ratio} vs {expected}");
    }
    let spec = ProblemSpec::new(2, 1, 0.0, 0.0, DISK, 1.0 / 16.0);
    assert_eq!(scaling_law_check(&spec, 1.0).unwrap().0, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn holder_recovers_powers(a in 0.6f64..2.2) {
        let h = 1.0 / 256.0;
        let g = Grid::new(DISK, h).unwrap();
        let u = g.to_field(&g.from_fn(|x, y| x.hypot(y).powf(a)));
        let fit = holder_probe(&u, &ProblemSpec::new(2, 1, 0.0, 0.0, DISK, h)).unwrap();
        prop_assert!(fit.radii.len() >= 5);
        prop_assert!((fit.alpha - a).abs() < 0.05, "{} vs {a}", fit.alpha);
    }

    #[test]
    fn estimates_scale_linearly(c in 0.1f64..10.0) {
        let h = 1.0 / 32.0;
        let g = Grid::new(DISK, h).unwrap();
        let spec = ProblemSpec::new(2, 1, 0.0, 0.0, DISK, h);
        let u = g.to_field(&g.from_fn(|x, y| (x * x + 2.0 * y * y - 1.0) * (1.0 + x)));
        let a = estimate_norms(&u, &spec, 1.5).unwrap();
        let b = estimate_norms(&u.scaled(c), &spec, 1.5).unwrap();
        for (p, q) in [(a.k, b.k), (a.l_beta, b.l_beta), (a.k_hat, b.k_hat), (a.l_hat, b.l_hat)] {
            prop_assert!(p >= 0.0 && p.is_finite());
            prop_assert!((q - c * p).abs() <= 1e-12 * c * p.max(1.0));
        }
    }
}

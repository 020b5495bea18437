use hesseig_web::*;

#[test]
fn profile_matches_bessel_zero() {
    let p = radial_profile_impl(2, 1, 0.0, 65).unwrap();
    assert!((p.lambda1() - 5.783186).abs() < 1e-4);
    let (r, u) = (p.r(), p.u());
    assert_eq!(r.len(), 65);
    assert!((u[0] + 1.0).abs() < 1e-6 && u[64].abs() < 1e-9);
    assert!(u.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn cone_map_levels() {
    let m = cone_map(1.0, 2.0, 40);
    assert_eq!(m.len(), 1600);
    // Top-right pixel is the positive cone, bottom-left is outside Γ_1.
    assert_eq!(m[39], 3);
    assert_eq!(m[40 * 39], 0);
    assert!(m.iter().all(|&v| v <= 3));
    // Membership is nested: Γ_3 ⊂ Γ_2 ⊂ Γ_1, so each level set is nonempty here.
    for lvl in 0..=3 {
        assert!(m.contains(&lvl));
    }
}

#[test]
fn coarse_disk_eigen() {
    let e = disk_eigen_impl(1, 0.0, 0.0, 16).unwrap();
    assert!((e.lambda() / 5.783186 - 1.0).abs() < 0.02);
    let v = e.values();
    assert_eq!(v.len(), e.nx() * e.ny());
    let min = v.iter().filter(|x| !x.is_nan()).cloned().fold(f64::INFINITY, f64::min);
    assert!((min + 1.0).abs() < 1e-12);
    assert!(v.iter().any(|x| x.is_nan()));
}

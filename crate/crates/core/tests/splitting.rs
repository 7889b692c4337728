use phlab::maps::*;
use phlab::rng::unit_points;
use phlab::splitting::*;
use phlab::{Error, Vec3};

fn golden() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}

fn eig_dirs() -> (Vec3, Vec3) {
    // eigenvectors of [[2,1],[1,1]]: (φ, 1) and (−1, φ) with φ = (1+√5)/2
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    (
        Vec3::new(phi, 1.0, 0.0).normalize(),
        Vec3::new(1.0, -phi, 0.0).normalize(),
    )
}

#[test]
fn cat3_splitting_is_the_eigenbasis() {
    let (u, s) = eig_dirs();
    for p in unit_points(11, 20) {
        let sp = compute_splitting(&cat3(), &p, DEFAULT_DEPTH).unwrap();
        assert!((sp.e_u - u).norm() < 1e-12, "{:?}", sp.e_u);
        assert!((sp.e_s - s).norm() < 1e-12, "{:?}", sp.e_s);
        assert!((sp.e_c - Vec3::z()).norm() < 1e-12);
    }
}

#[test]
fn l_center_is_vertical() {
    for p in unit_points(12, 20) {
        let sp = compute_splitting(&heisenberg_l(), &p, DEFAULT_DEPTH).unwrap();
        assert!((sp.e_c - Vec3::z()).norm() < 1e-12);
    }
}

#[test]
fn identity_is_rejected() {
    let r = compute_splitting(
        &identity(phlab::geometry::Manifold::Torus3),
        &Vec3::new(0.1, 0.2, 0.3),
        64,
    );
    assert!(matches!(r, Err(Error::NotPartiallyHyperbolic(_))), "{r:?}");
}

#[test]
fn cat3_one_step_multipliers() {
    let m = finite_time_exponents(&cat3(), &Vec3::new(0.3, 0.1, 0.7), 1).unwrap();
    assert!((m.u - golden()).abs() < 1e-12);
    assert!((m.s - 1.0 / golden()).abs() < 1e-12);
    assert!((m.c - 1.0).abs() < 1e-15);
    let z = finite_time_exponents(&cat3(), &Vec3::new(0.3, 0.1, 0.7), 0).unwrap();
    assert_eq!((z.s, z.c, z.u), (1.0, 1.0, 1.0));
}

#[test]
fn f_center_multiplier_is_one() {
    let f = heisenberg_f(0.01);
    for p in unit_points(13, 10) {
        for n in [1, 5, -3, 12] {
            let m = finite_time_exponents(&f, &p, n).unwrap();
            assert!((m.c - 1.0).abs() < 1e-12, "{}", m.c);
        }
    }
}

#[test]
fn multipliers_are_additive() {
    let f = heisenberg_f(0.01);
    let p = Vec3::new(0.37, 0.81, 0.12);
    let (a, b) = (3i64, 4i64);
    let whole = finite_time_exponents(&f, &p, a + b).unwrap();
    let first = finite_time_exponents(&f, &p, a).unwrap();
    let orbit = Orbit::new(&f, &p, 0, a as usize).unwrap();
    let second = finite_time_exponents(&f, &orbit.at(a as isize), b).unwrap();
    for (w, x, y) in [
        (whole.s, first.s, second.s),
        (whole.c, first.c, second.c),
        (whole.u, first.u, second.u),
    ] {
        assert!((w / (x * y) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn cat3_lyapunov_exponents() {
    let r = lyapunov_exponents(&cat3(), &Vec3::new(0.123, 0.456, 0.789), 10_000, 10).unwrap();
    assert!((r.chi_u - golden().ln()).abs() <= 1e-6);
    assert!(r.sum().abs() <= 2e-6);
}

#[test]
fn conservative_exponent_sums_vanish() {
    for m in [
        cat3(),
        heisenberg_l(),
        heisenberg_h(0.01),
        heisenberg_f(0.01),
        skew(0.05),
    ] {
        let r = lyapunov_exponents(&m, &Vec3::new(0.3, 0.2, 0.1), 10_000, 10).unwrap();
        assert!(r.sum().abs() <= 2e-6, "{} sum {}", m.name, r.sum());
        if m.name == "H" {
            // a shear: all exponents vanish (QR fallback)
            assert!(r.chi_u.abs() < 1e-2 && r.chi_s.abs() < 1e-2);
        } else {
            assert!(r.chi_s < 0.0 && r.chi_u > 0.0);
        }
    }
}

#[test]
fn f_center_exponent_vanishes() {
    let r =
        lyapunov_exponents(&heisenberg_f(0.01), &Vec3::new(0.41, 0.77, 0.5), 10_000, 10).unwrap();
    assert!(r.chi_c.abs() <= 1e-8, "{}", r.chi_c);
    assert!(r.window_inf[2] > 0.0 && r.window_sup[0] < 0.0);
}

#[test]
fn certificates() {
    let sample = unit_points(14, 64);
    let c = certify_partial_hyperbolicity(&cat3(), &sample, 3, 1.0).unwrap();
    assert_eq!(c.k, 1);
    assert!(
        (c.margin_u - golden().ln()).abs() < 1e-12 && (c.margin_s - golden().ln()).abs() < 1e-12
    );
    assert!(c.r_bunched && c.strongly_r_bunched);
    let c = certify_partial_hyperbolicity(&heisenberg_f(0.01), &sample, 3, 1.0).unwrap();
    assert_eq!(c.k, 1);
    let refused = certify_partial_hyperbolicity(
        &identity(phlab::geometry::Manifold::Torus3),
        &sample,
        3,
        1.0,
    );
    assert!(matches!(refused, Err(Error::NotPartiallyHyperbolic(_))));
}

#[test]
fn seed_independence() {
    let f = heisenberg_f(0.02);
    let p = Vec3::new(0.6, 0.3, 0.9);
    let a = compute_splitting_seeded(&f, &p, 64, Vec3::new(0.31, 0.57, 0.76)).unwrap();
    let b = compute_splitting_seeded(&f, &p, 64, Vec3::new(-0.8, 0.1, 0.4)).unwrap();
    assert!(line_angle(&a.e_u, &b.e_u) < 1e-8);
    assert!(line_angle(&a.e_s, &b.e_s) < 1e-8);
    assert!(line_angle(&a.e_c, &b.e_c) < 1e-8);
}

#[test]
fn cat3_plane_field_is_constant() {
    let pairs = sample_pairs(15, 200, 1e-4, 1e-1);
    let r = estimate_plane_regularity(&cat3(), &pairs).unwrap();
    assert!(r.lipschitz_constant <= 1e-8);
}

#[test]
fn f_plane_field_lipschitz_constant() {
    let pairs = sample_pairs(16, 300, 1e-4, 1e-1);
    let r = estimate_plane_regularity(&heisenberg_f(0.01), &pairs).unwrap();
    // normal (0, −x, 1)/√(1+x²) turns at rate 1/(1+x²)
    let sup = pairs
        .iter()
        .map(|(p, _)| 1.0 / (1.0 + p.x * p.x))
        .fold(0.0, f64::max);
    assert!(
        r.lipschitz_constant <= 2.0 * sup && r.lipschitz_constant >= 0.5 * sup,
        "{} vs {sup}",
        r.lipschitz_constant
    );
    assert!(r.holder_exponent > 0.9);
}

#[test]
fn degenerate_regularity_sample() {
    let p = Vec3::new(0.1, 0.2, 0.3);
    let pairs = vec![(p, p + Vec3::new(1e-3, 0.0, 0.0)); 5];
    assert!(matches!(
        estimate_plane_regularity(&cat3(), &pairs),
        Err(Error::Degenerate(_))
    ));
}

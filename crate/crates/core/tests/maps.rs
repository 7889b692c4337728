use phlab::geometry::{Manifold, Point};
use phlab::maps::*;
use phlab::{Mat3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_points(n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen()))
        .collect()
}

fn all_builtins() -> Vec<MapSpec> {
    vec![
        cat3(),
        heisenberg_l(),
        heisenberg_h(0.01),
        heisenberg_f(0.01),
        skew(0.05),
    ]
}

#[test]
fn l_maps_p0_to_q0() {
    let q = heisenberg_l()
        .apply(&Point::new(Manifold::Heisenberg, [0.2, 0.4, 0.0]))
        .unwrap();
    assert!((q.coords[0] - 0.8).abs() < 1e-15 && (q.coords[1] - 0.6).abs() < 1e-15);
    let o = heisenberg_l()
        .apply(&Point::new(Manifold::Heisenberg, [0.0; 3]))
        .unwrap();
    assert_eq!(o.coords, [0.0; 3]);
}

#[test]
fn h_at_zero_is_identity() {
    let h = heisenberg_h(0.0);
    for p in random_points(50, 1) {
        assert!((h.lift(&p).unwrap() - p).norm() == 0.0);
    }
}

#[test]
fn l_jacobian_closed_form() {
    let l = heisenberg_l();
    for p in random_points(1000, 2) {
        let j = l.jacobian(&p).unwrap();
        let oracle = Mat3::new(
            2.0,
            1.0,
            0.0,
            1.0,
            1.0,
            0.0,
            2.0 * p.x + p.y,
            p.x + p.y,
            1.0,
        );
        assert!((j - oracle).norm() < 1e-14);
        assert!((j.determinant() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn f_fixes_vertical_direction() {
    let f = heisenberg_f(0.01);
    for p in random_points(100, 3) {
        let v = f.jacobian(&p).unwrap() * Vec3::z();
        assert_eq!(v, Vec3::z());
    }
}

#[test]
fn conservative_builtins_have_unit_determinant() {
    for m in all_builtins() {
        assert!(m.volume_preserving);
        for p in random_points(200, 4) {
            let d = m.jacobian(&p).unwrap().determinant();
            assert!((d - 1.0).abs() <= 1e-12, "{} det {d}", m.name);
        }
    }
}

#[test]
fn builtins_descend_to_quotient() {
    for m in all_builtins() {
        let r = m.deck_commutation_residual(&random_points(100, 5)).unwrap();
        assert!(r <= 1e-9, "{} residual {r:e}", m.name);
    }
}

#[test]
fn inverse_round_trips() {
    for m in all_builtins() {
        for p in random_points(200, 6) {
            let q = m.lift(&p).unwrap();
            let back = m.lift_inverse(&q).unwrap();
            assert!((back - p).norm() <= 1e-12, "{}", m.name);
            let pp = Point::from_vec(m.manifold, &p);
            let r = m.apply(&m.inverse_apply(&pp).unwrap()).unwrap();
            assert!(phlab::geometry::quotient_distance(&r, &pp) <= 1e-10);
        }
    }
}

#[test]
fn newton_inverse_without_declared_formula() {
    let declared = heisenberg_f(0.05);
    let bare = MapSpec::new(
        "F",
        declared.manifold,
        declared.components.clone(),
        None,
        declared.params.clone(),
    )
    .unwrap();
    for p in random_points(50, 7) {
        let q = declared.lift(&p).unwrap();
        assert!((bare.lift_inverse(&q).unwrap() - p).norm() <= 1e-11);
    }
}

#[test]
fn fibered_detection() {
    assert!(heisenberg_f(0.01).fibered);
    assert!(skew(0.1).fibered);
    assert!(cat3().fibered);
    let twisted = MapSpec::from_strings(
        "tw",
        Manifold::Torus3,
        ["2*x + y + 0.01*sin(2*pi*z)", "x + y", "z"],
        None,
        Default::default(),
    )
    .unwrap();
    assert!(!twisted.fibered);
}

#[test]
fn periodic_point_counts_match_lefschetz() {
    // |det(Aⁿ − I)| = λ₊ⁿ + λ₋ⁿ − 2
    for (n, expected) in [(1, 1), (2, 5), (3, 16), (6, 320)] {
        let orbits = find_periodic_orbits(&cat3(), n, 64, 1e-12).unwrap();
        let count: usize = orbits.iter().map(|o| o.period).sum();
        assert_eq!(count, expected, "period {n}");
        for o in &orbits {
            assert!(o.residual <= 1e-10);
            assert!(n % o.period == 0);
        }
    }
}

#[test]
fn period_two_orbit_through_p0() {
    let orbits = find_periodic_orbits(&heisenberg_l(), 2, 64, 1e-12).unwrap();
    let hit = orbits.iter().any(|o| {
        o.period == 2
            && o.points
                .iter()
                .any(|p| (p.coords[0] - 0.2).abs() < 1e-12 && (p.coords[1] - 0.4).abs() < 1e-12)
            && o.points
                .iter()
                .any(|p| (p.coords[0] - 0.8).abs() < 1e-12 && (p.coords[1] - 0.6).abs() < 1e-12)
    });
    assert!(hit);
}

#[test]
fn skew_orbit_over_p0_is_genuine() {
    let o = orbit_from_point(&skew(0.1), &Vec3::new(0.2, 0.4, 0.3), 2).unwrap();
    assert!(o.is_genuine());
    assert!(o.residual <= 1e-10);
}

#[test]
fn continuation_tangent_at_zero() {
    let f = heisenberg_f(0.0);
    let s = (2.0 * std::f64::consts::PI / 5.0).sin();
    let (ift, fd) =
        periodic_point_derivative(&f, "eps", &Vec3::new(0.2, 0.4, 0.0), 2, 1e-5).unwrap();
    let oracle = Vec3::new(-s / 5.0, -2.0 * s / 5.0, 0.0);
    assert!((ift - oracle).norm() < 1e-12, "{ift:?}");
    assert!((fd - oracle).norm() < 1e-8, "{fd:?}");
}

#[test]
fn constant_family_gives_constant_curve() {
    let m = MapSpec::from_strings(
        "const",
        Manifold::Torus3,
        ["2*x + y + 0*a", "x + y", "z"],
        None,
        [("a".to_string(), 0.0)].into(),
    )
    .unwrap();
    let curve =
        continue_periodic_orbit(&m, "a", &Vec3::new(0.2, 0.4, 0.0), 2, &[0.05, 0.1]).unwrap();
    for c in curve {
        assert!((c.point[0] - 0.2).abs() < 1e-14 && (c.point[1] - 0.4).abs() < 1e-14);
    }
}

#[test]
fn continuation_defect_is_quadratic() {
    let f = heisenberg_f(0.0);
    let s = (2.0 * std::f64::consts::PI / 5.0).sin();
    let p0 = Vec3::new(0.2, 0.4, 0.0);
    let dp = Vec3::new(-s / 5.0, -2.0 * s / 5.0, 0.0);
    let eps: Vec<f64> = (0..=8).map(|i| 1e-3 * 10f64.powf(i as f64 / 4.0)).collect();
    let curve = continue_periodic_orbit(&f, "eps", &p0, 2, &eps).unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .iter()
        .map(|c| {
            let d = (Vec3::from(c.point) - p0 - dp * c.eps).norm();
            (c.eps.ln(), d.ln())
        })
        .unzip();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((1.8..=2.2).contains(&slope), "slope {slope}");
}

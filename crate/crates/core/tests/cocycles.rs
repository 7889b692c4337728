use phlab::cocycles::*;
use phlab::maps::*;
use phlab::normalform::*;
use phlab::splitting::finite_time_exponents;
use phlab::{Error, Vec3};

fn x0() -> Vec3 {
    Vec3::new(0.31, 0.77, 0.2)
}

fn family(family: ChartFamily) -> ChartOptions {
    ChartOptions {
        family,
        ..Default::default()
    }
}

// period-2 orbit of F_ε followed from the linear map
fn period_two(eps: f64) -> PeriodicOrbit {
    let path = continue_periodic_orbit(
        &heisenberg_f(0.0),
        "eps",
        &Vec3::new(0.2, 0.4, 0.0),
        2,
        &[eps],
    )
    .unwrap();
    let p = path.last().unwrap().point;
    orbit_from_point(&heisenberg_f(eps), &Vec3::from(p), 2).unwrap()
}

fn mixed() -> TwistedCocycle {
    let tau = std::f64::consts::TAU;
    TwistedCocycle::new(
        "mixed",
        move |p| Ok((tau * p.x).sin() + 0.3 * (tau * p.y).cos()),
        move |p| Ok(1.0 + 0.2 * (tau * p.y).sin()),
    )
}

#[test]
fn empty_sums_vanish() {
    let f = heisenberg_f(0.01);
    let c = AdditiveCocycle::from_expr("sin(2*pi*x) + y").unwrap();
    assert_eq!(birkhoff_sum(&c, &f, &x0(), 0).unwrap(), 0.0);
    assert_eq!(twisted_sum(&mixed(), &f, &x0(), 0).unwrap(), 0.0);
    assert_eq!(twist_product(&mixed(), &f, &x0(), 0).unwrap(), 1.0);
}

#[test]
fn additive_coboundary_telescopes() {
    let f = heisenberg_f(0.01);
    let c = AdditiveCocycle::coboundary(&f, "sin(2*pi*x)").unwrap();
    let o = Orbit::new(&f, &x0(), 0, 25).unwrap();
    let phi = |p: Vec3| (std::f64::consts::TAU * p.x).sin();
    for n in [1, 7, 25] {
        let s = birkhoff_sum(&c, &f, &x0(), n).unwrap();
        assert!(
            (s - (phi(o.at(n as isize)) - phi(x0()))).abs() <= 1e-10,
            "n = {n}"
        );
    }
}

#[test]
fn log_det_of_a_volume_preserving_map_sums_to_zero() {
    let f = heisenberg_f(0.01);
    let c = AdditiveCocycle::log_det(&f);
    for n in [10i64, 50] {
        assert!(birkhoff_sum(&c, &f, &x0(), n).unwrap().abs() <= 1e-10 * n as f64);
    }
}

#[test]
fn fh_twist_values() {
    assert!((fh_twist(&cat3(), &x0()).unwrap() - 1.0).abs() <= 1e-12);
    let f = heisenberg_f(0.01);
    let v = fh_twist(&f, &x0()).unwrap();
    assert!(v > 0.0 && v.is_finite());
    // n-fold product against the finite-time exponents
    let g = heisenberg_f(0.05);
    let tc = TwistedCocycle::new("zero", |_| Ok(0.0), {
        let g = g.clone();
        move |p| fh_twist(&g, p)
    });
    let n = 6;
    let prod = twist_product(&tc, &g, &x0(), n).unwrap();
    let here = finite_time_exponents(&g, &x0(), n).unwrap();
    let fx = g.step(&x0()).unwrap().0;
    let there = finite_time_exponents(&g, &fx, n).unwrap();
    let expect = here.s * here.u / there.c;
    assert!(
        (prod - expect).abs() <= 1e-8 * expect.abs(),
        "{prod} vs {expect}"
    );
}

#[test]
fn twisted_coboundary_telescopes() {
    let f = heisenberg_f(0.01);
    let tc = TwistedCocycle::coboundary(&f, "cos(2*pi*y)", "1 + 0.1*sin(2*pi*x)").unwrap();
    let o = Orbit::new(&f, &x0(), 12, 12).unwrap();
    let beta = |p: Vec3| (std::f64::consts::TAU * p.y).cos();
    for n in [-12i64, -5, 3, 12] {
        let s = twisted_sum(&tc, &f, &x0(), n).unwrap();
        let lam = twist_product(&tc, &f, &x0(), n).unwrap();
        let expect = lam * beta(o.at(n as isize)) - beta(x0());
        assert!((s - expect).abs() <= 1e-9, "n = {n}: {s} vs {expect}");
    }
}

#[test]
fn cocycle_identity() {
    let f = heisenberg_f(0.02);
    let tc = mixed();
    for (m, n) in [(3i64, 4i64), (5, -2), (-3, 7), (-4, -3)] {
        let y = Orbit::new(&f, &x0(), 8, 8).unwrap().at(n as isize);
        let lhs = twisted_sum(&tc, &f, &x0(), m + n).unwrap();
        let rhs = twisted_sum(&tc, &f, &x0(), n).unwrap()
            + twist_product(&tc, &f, &x0(), n).unwrap() * twisted_sum(&tc, &f, &y, m).unwrap();
        assert!(
            (lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()),
            "({m}, {n}): {lhs} vs {rhs}"
        );
        let prod = twist_product(&tc, &f, &x0(), m + n).unwrap();
        let split =
            twist_product(&tc, &f, &x0(), n).unwrap() * twist_product(&tc, &f, &y, m).unwrap();
        assert!((prod - split).abs() <= 1e-12 * prod.abs());
    }
}

#[test]
fn unit_twist_is_the_birkhoff_sum() {
    let f = heisenberg_f(0.01);
    let c = AdditiveCocycle::from_expr("sin(2*pi*x)*cos(2*pi*y) + 0.5").unwrap();
    let one = TwistedCocycle::new(
        "one",
        {
            let c = c.clone();
            move |p| c.eval(p)
        },
        |_| Ok(1.0),
    );
    for n in [-9i64, -1, 1, 17] {
        let a = twisted_sum(&one, &f, &x0(), n).unwrap();
        let b = birkhoff_sum(&c, &f, &x0(), n).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn obstruction_of_a_coboundary_vanishes() {
    let orbit = period_two(0.01);
    let f = heisenberg_f(0.01);
    let tc = TwistedCocycle::coboundary(&f, "cos(2*pi*y) + x", "1").unwrap();
    let ob = periodic_obstruction(&tc, &orbit).unwrap();
    assert!(ob.value.abs() <= 1e-12 && ob.spread <= 1e-12);
    assert!(ob.well_defined);
}

#[test]
fn fh_obstruction_on_a_period_two_orbit() {
    let eps = 0.01;
    let f = heisenberg_f(eps);
    let orbit = period_two(eps);
    let mut values = vec![];
    for fam in [
        ChartFamily::Holonomy,
        ChartFamily::LeafSum,
        ChartFamily::TemplateNormalized,
    ] {
        let ob = periodic_obstruction(&TwistedCocycle::fh(&f, family(fam)), &orbit).unwrap();
        assert!(
            (ob.twist_product - 1.0).abs() <= 1e-10,
            "{fam:?}: {}",
            ob.twist_product
        );
        assert!(ob.well_defined);
        assert!(ob.value.abs() <= 1e-6, "{fam:?}: {:e}", ob.value);
        values.push(ob.value);
    }
    assert!(values.iter().all(|v| (v - values[0]).abs() <= 1e-6));
}

#[test]
fn inexact_orbits_are_refused() {
    let mut orbit = period_two(0.01);
    orbit.residual = 1e-6;
    let tc = TwistedCocycle::untwisted(&AdditiveCocycle::constant(1.0));
    assert!(matches!(
        periodic_obstruction(&tc, &orbit),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn livshits_verdicts() {
    let f = heisenberg_f(0.01);
    let mut orbits = vec![];
    for p in 1..=6 {
        orbits.extend(find_periodic_orbits(&f, p, 12, 1e-12).unwrap());
    }
    assert!(!orbits.is_empty());
    let r = livshits_sign_test(&AdditiveCocycle::log_det(&f), &orbits).unwrap();
    assert_eq!(r.verdict, Verdict::AllZero);

    let r = livshits_sign_test(&AdditiveCocycle::constant(1.0), &orbits).unwrap();
    assert_eq!(r.verdict, Verdict::AllNonnegative);
    let shortest = orbits.iter().map(|o| o.period).min().unwrap();
    assert_eq!(r.worst_value, shortest as f64);

    let cob = AdditiveCocycle::coboundary(&f, "sin(2*pi*x) + cos(2*pi*(x + y))").unwrap();
    assert_eq!(
        livshits_sign_test(&cob, &orbits).unwrap().verdict,
        Verdict::AllZero
    );

    let signed = AdditiveCocycle::from_expr("cos(2*pi*x)").unwrap();
    assert_eq!(
        livshits_sign_test(&signed, &orbits).unwrap().verdict,
        Verdict::Mixed
    );
    assert!(matches!(
        livshits_sign_test(&signed, &[]),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn coboundary_residual_with_zero_transfer() {
    let alpha = [0.3, -0.7, 0.1];
    let twist = [1.0, 2.0, 0.5];
    let r = coboundary_residual(&alpha, &twist, &[0.0; 4]).unwrap();
    assert_eq!(r, 0.7);
    // exact coboundary data
    let beta = [0.2, -0.1, 0.4, 1.0];
    let a: Vec<f64> = (0..3).map(|i| twist[i] * beta[i + 1] - beta[i]).collect();
    assert!(coboundary_residual(&a, &twist, &beta).unwrap() <= 1e-15);
}

#[test]
fn fh_is_a_coboundary_along_an_orbit() {
    let f = heisenberg_f(0.01);
    let data = fh_along_orbit(&f, &x0(), 1000, family(ChartFamily::Holonomy)).unwrap();
    assert_eq!(data.alpha.len(), 1000);
    assert_eq!(data.points.len(), 1001);
    let fit = fit_twisted_coboundary(&data, 4).unwrap();
    assert!(fit.residual <= 1e-4, "{:e}", fit.residual);
    let direct = coboundary_residual(&data.alpha, &data.twist, &fit.beta).unwrap();
    assert!((direct - fit.residual).abs() <= 1e-12);
}

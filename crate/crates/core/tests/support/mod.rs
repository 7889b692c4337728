//! Property bodies shared by the `properties` and `acceptance` targets.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use phlab::calculus::{eval_jet2, parse_expr, Expr, Jet1D, Jet2Map3};
use phlab::cocycles::*;
use phlab::contact::{pullback_ratio, pullback_ratio_iterate, reeb_field};
use phlab::geometry::*;
use phlab::maps::*;
use phlab::splitting::{compute_splitting, line_angle, DEFAULT_DEPTH};
use phlab::{Mat3, Vec3};

type Outcome = Result<(), TestCaseError>;

fn unit() -> impl Strategy<Value = f64> {
    0.0..1.0f64
}

fn point() -> impl Strategy<Value = Vec3> {
    (unit(), unit(), unit()).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn run<S: Strategy>(
    cases: u32,
    deterministic: bool,
    strategy: S,
    test: impl Fn(S::Value) -> Outcome,
) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = if deterministic {
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
    } else {
        TestRunner::new(config)
    };
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

const EXPRS: [&str; 6] = [
    "x^2 + x*y + y^2/2",
    "sin(2*pi*x)*cos(y) - z^3",
    "exp(x - y)/(2 + cos(z))",
    "-(x - 2*y)^3 + 1/(1 + x^2)",
    "z + 0.05*sin(2*pi*x)*y",
    "(x*y*z)^2 - 3",
];

fn central(e: &Expr, p: [f64; 3], i: usize, h: f64) -> f64 {
    let params = BTreeMap::new();
    let (mut a, mut b) = (p, p);
    a[i] += h;
    b[i] -= h;
    (eval_jet2(e, a, &params).unwrap().v - eval_jet2(e, b, &params).unwrap().v) / (2.0 * h)
}

fn fd_jacobian(m: &MapSpec, p: &Vec3, h: f64) -> Mat3 {
    let mut j = Mat3::zeros();
    for i in 0..3 {
        let mut e = Vec3::zeros();
        e[i] = h;
        let d = (m.lift(&(p + e)).unwrap() - m.lift(&(p - e)).unwrap()) / (2.0 * h);
        j.set_column(i, &d);
    }
    j
}

// f^n in reduced representatives, n of either sign
fn iterate(m: &MapSpec, p: &Vec3, n: i64) -> Vec3 {
    let mut q = *p;
    for _ in 0..n.unsigned_abs() {
        q = if n >= 0 {
            m.step(&q).unwrap().0
        } else {
            m.manifold.reduce(&m.lift_inverse(&q).unwrap()).0
        };
    }
    q
}

pub fn jet_matches_finite_differences(det: bool) -> Result<(), String> {
    let s = (0..EXPRS.len(), unit(), unit(), unit());
    run(64, det, s, |(k, x, y, z)| {
        let e = parse_expr(EXPRS[k]).unwrap();
        let p = [x, y, z];
        let j = eval_jet2(&e, p, &BTreeMap::new()).unwrap();
        for i in 0..3 {
            let g = central(&e, p, i, 1e-5);
            prop_assert!(
                (j.g[i] - g).abs() <= 1e-6 * (1.0 + g.abs()),
                "{} d{}",
                EXPRS[k],
                i
            );
            for l in 0..3 {
                prop_assert_eq!(j.h[i][l], j.h[l][i]);
            }
        }
        // mixed second derivative from differences of the symbolic first
        let h01 = central(&e.derivative(0), p, 1, 1e-5);
        prop_assert!((j.h[0][1] - h01).abs() <= 1e-6 * (1.0 + h01.abs()));
        Ok(())
    })
}

pub fn map_jacobians_match_finite_differences(det: bool) -> Result<(), String> {
    run(64, det, point(), |p| {
        for name in BUILTIN_NAMES {
            let m = builtin(name).unwrap();
            let j = m.jacobian(&p).unwrap();
            let fd = fd_jacobian(&m, &p, 1e-6);
            prop_assert!((j - fd).amax() <= 1e-7 * (1.0 + j.amax()), "{}", name);
        }
        Ok(())
    })
}

pub fn jet_composition_is_the_chain_rule(det: bool) -> Result<(), String> {
    run(64, det, point(), |p| {
        let m = heisenberg_f(0.05);
        let inner = m.jet2_at(&p).unwrap();
        let outer = m.jet2_at(&inner.value).unwrap();
        let c = Jet2Map3::compose(&outer, &inner).unwrap();
        prop_assert_eq!(c.value, outer.value);
        let jac = outer.jacobian * inner.jacobian;
        prop_assert!((c.jacobian - jac).amax() <= 1e-12 * (1.0 + jac.amax()));
        for k in 0..3 {
            prop_assert_eq!(c.hessians[k], c.hessians[k].transpose());
        }
        // hessian of f∘f from differences of its jacobian
        let h = 1e-5;
        let jj = |q: Vec3| m.jacobian(&m.lift(&q).unwrap()).unwrap() * m.jacobian(&q).unwrap();
        for i in 0..3 {
            let mut e = Vec3::zeros();
            e[i] = h;
            let col = (jj(p + e) - jj(p - e)) / (2.0 * h);
            for k in 0..3 {
                for l in 0..3 {
                    let want = col[(k, l)];
                    prop_assert!((c.hessians[k][(l, i)] - want).abs() <= 1e-5 * (1.0 + want.abs()));
                }
            }
        }
        Ok(())
    })
}

pub fn jet1d_arithmetic_is_truncated(det: bool) -> Result<(), String> {
    let coeffs = || prop::collection::vec(-2.0..2.0f64, 8);
    let s = (1usize..8, coeffs(), coeffs(), -0.01..0.01f64);
    run(64, det, s, |(order, a, b, t)| {
        let ja = Jet1D::from_coeffs(0.0, a[..=order].to_vec());
        let jb = Jet1D::from_coeffs(0.0, b[..=order].to_vec());
        let prod = ja.checked_mul(&jb).unwrap();
        prop_assert_eq!(prod.order(), order);
        prop_assert_eq!(ja.checked_add(&jb).unwrap().order(), order);
        // the dropped tail has at most (order+1) terms of size 4·|t|^(order+1)
        let exact = ja.eval(t) * jb.eval(t);
        let tail = 8.0 * (order as f64 + 1.0).powi(2) * t.abs().powi(order as i32 + 1);
        prop_assert!((prod.eval(t) - exact).abs() <= tail + 1e-15);
        Ok(())
    })
}

pub fn printing_round_trips(det: bool) -> Result<(), String> {
    run(64, det, (0..EXPRS.len(), point()), |(k, p)| {
        let e = parse_expr(EXPRS[k]).unwrap();
        let printed = e.to_string();
        let again = parse_expr(&printed).unwrap();
        prop_assert_eq!(&again.to_string(), &printed);
        let params = BTreeMap::new();
        let v = [p.x, p.y, p.z];
        prop_assert_eq!(
            eval_jet2(&e, v, &params).unwrap().v,
            eval_jet2(&again, v, &params).unwrap().v
        );
        Ok(())
    })
}

pub fn reduction_lands_in_the_fundamental_domain(det: bool) -> Result<(), String> {
    let c = || -20.0..20.0f64;
    run(64, det, (c(), c(), c()), |(x, y, z)| {
        for man in [Manifold::Torus3, Manifold::Heisenberg] {
            let p = Point::new(man, [x, y, z]);
            let r = reduce_to_fundamental_domain(&p);
            prop_assert!(
                r.coords.iter().all(|c| (0.0..1.0).contains(c)),
                "{:?}",
                r.coords
            );
            prop_assert!(quotient_distance(&p, &r) <= 1e-9);
        }
        Ok(())
    })
}

pub fn quotient_distance_is_symmetric_and_deck_invariant(det: bool) -> Result<(), String> {
    let s = (point(), point(), -3i64..4, -3i64..4, -3i64..4);
    run(64, det, s, |(p, q, m, n, k)| {
        for man in [Manifold::Torus3, Manifold::Heisenberg] {
            let d = man.distance(&p, &q);
            prop_assert!((d - man.distance(&q, &p)).abs() <= 1e-12);
            let g = Deck::new(m, n, k);
            prop_assert!((man.distance(&man.apply_deck(g, &p), &q) - d).abs() <= 1e-9);
        }
        Ok(())
    })
}

pub fn builtins_commute_with_deck_generators(det: bool) -> Result<(), String> {
    run(64, det, point(), |p| {
        for name in BUILTIN_NAMES {
            let m = builtin(name).unwrap();
            prop_assert!(
                m.deck_commutation_residual(&[p]).unwrap() <= 1e-9,
                "{}",
                name
            );
        }
        Ok(())
    })
}

pub fn splitting_is_df_invariant(det: bool) -> Result<(), String> {
    run(24, det, (point(), 0..3usize), |(p, which)| {
        let m = [cat3(), heisenberg_f(0.05), skew(0.05)][which].clone();
        let s = compute_splitting(&m, &p, DEFAULT_DEPTH).unwrap();
        let t = compute_splitting(&m, &m.lift(&p).unwrap(), DEFAULT_DEPTH).unwrap();
        let j = m.jacobian(&p).unwrap();
        for (a, b) in [(s.e_s, t.e_s), (s.e_c, t.e_c), (s.e_u, t.e_u)] {
            prop_assert!(line_angle(&(j * a), &b) <= 1e-8, "{}", m.name);
        }
        Ok(())
    })
}

pub fn twisted_cocycle_identity(det: bool) -> Result<(), String> {
    // the two sides follow separately computed orbits, which drift apart like
    // λ_u^(|n|+|k|); seven steps each keeps that below the tolerance
    let s = (point(), -7i64..8, -7i64..8, 0.1..0.6f64);
    run(24, det, s, |(p, n, k, a)| {
        let m = heisenberg_f(0.05);
        let tc = TwistedCocycle::new(
            "probe",
            // deck-invariant, so a function on the quotient
            |v: &Vec3| Ok((TAU * v.x).sin() + (TAU * v.y).sin().powi(2)),
            move |v: &Vec3| Ok(1.0 + a * (TAU * v.y).cos()),
        );
        let q = iterate(&m, &p, n);
        let whole = twisted_sum(&tc, &m, &p, n + k).unwrap();
        let parts = twisted_sum(&tc, &m, &p, n).unwrap()
            + twist_product(&tc, &m, &p, n).unwrap() * twisted_sum(&tc, &m, &q, k).unwrap();
        prop_assert!(
            (whole - parts).abs() <= 1e-9 * (1.0 + whole.abs()),
            "{whole} vs {parts}"
        );
        Ok(())
    })
}

pub fn coboundaries_telescope(det: bool) -> Result<(), String> {
    run(
        24,
        det,
        (point(), -10i64..11, 0..2usize),
        |(p, n, which)| {
            let m = [cat3(), heisenberg_f(0.05)][which].clone();
            let phi = "sin(2*pi*x) + cos(2*pi*y)";
            let add = AdditiveCocycle::coboundary(&m, phi).unwrap();
            let tw = TwistedCocycle::coboundary(&m, phi, "1.5 + sin(2*pi*x)/2").unwrap();
            let base = |v: &Vec3| (TAU * v.x).sin() + (TAU * v.y).cos();
            let q = iterate(&m, &p, n);
            let s = birkhoff_sum(&add, &m, &p, n).unwrap();
            prop_assert!((s - (base(&q) - base(&p))).abs() <= 1e-9);
            let t = twisted_sum(&tw, &m, &p, n).unwrap();
            let want = twist_product(&tw, &m, &p, n).unwrap() * base(&q) - base(&p);
            prop_assert!(
                (t - want).abs() <= 1e-9 * (1.0 + want.abs()),
                "{t} vs {want}"
            );
            Ok(())
        },
    )
}

pub fn pullback_ratio_is_multiplicative(det: bool) -> Result<(), String> {
    run(24, det, (point(), 2usize..5), |(p, n)| {
        let m = heisenberg_f(0.05);
        let form = OneForm::parse("0", "-x*(2 + sin(2*pi*x))", "2 + sin(2*pi*x)").unwrap();
        let pts: Vec<Vec3> = (0..n as i64).map(|i| iterate(&m, &p, i)).collect();
        let single = pullback_ratio(&m, &form, &pts).unwrap();
        let many = pullback_ratio_iterate(&m, &form, &[p], n).unwrap();
        let prod: f64 = single.rho.iter().product();
        prop_assert!((many.rho[0] - prod).abs() <= 1e-10 * prod.abs());
        prop_assert!(single.max_residual <= 1e-10);
        Ok(())
    })
}

pub fn reeb_field_solves_its_system(det: bool) -> Result<(), String> {
    run(24, det, (point(), 0.5..3.0f64), |(p, c)| {
        let form =
            OneForm::parse("sin(2*pi*y)/10", "-x", &format!("{c} + cos(2*pi*x)/10")).unwrap();
        let r = reeb_field(&form, &p).unwrap();
        prop_assert!((form.at(&p).unwrap().dot(&r) - 1.0).abs() <= 1e-12);
        let omega = exterior_derivative(&form).matrix(&p).unwrap();
        prop_assert!((omega * r).amax() <= 1e-12 * (1.0 + omega.amax() * r.amax()));
        Ok(())
    })
}

pub type Property = (&'static str, fn(bool) -> Result<(), String>);

pub const SUITE: [Property; 13] = [
    (
        "jet_matches_finite_differences",
        jet_matches_finite_differences,
    ),
    (
        "map_jacobians_match_finite_differences",
        map_jacobians_match_finite_differences,
    ),
    (
        "jet_composition_is_the_chain_rule",
        jet_composition_is_the_chain_rule,
    ),
    (
        "jet1d_arithmetic_is_truncated",
        jet1d_arithmetic_is_truncated,
    ),
    ("printing_round_trips", printing_round_trips),
    (
        "reduction_lands_in_the_fundamental_domain",
        reduction_lands_in_the_fundamental_domain,
    ),
    (
        "quotient_distance_is_symmetric_and_deck_invariant",
        quotient_distance_is_symmetric_and_deck_invariant,
    ),
    (
        "builtins_commute_with_deck_generators",
        builtins_commute_with_deck_generators,
    ),
    ("splitting_is_df_invariant", splitting_is_df_invariant),
    ("twisted_cocycle_identity", twisted_cocycle_identity),
    ("coboundaries_telescope", coboundaries_telescope),
    (
        "pullback_ratio_is_multiplicative",
        pullback_ratio_is_multiplicative,
    ),
    ("reeb_field_solves_its_system", reeb_field_solves_its_system),
];

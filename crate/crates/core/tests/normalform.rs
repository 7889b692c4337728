use phlab::geometry::Point;
use phlab::maps::*;
use phlab::normalform::*;
use phlab::splitting::{compute_splitting, finite_time_exponents, line_angle, DEFAULT_DEPTH};
use phlab::{Error, Vec3};

fn x0() -> Vec3 {
    Vec3::new(0.3, 0.2, 0.1)
}

fn grid(h: f64, n: i32) -> Vec<f64> {
    (-n..=n).map(|i| h * i as f64 / n as f64).collect()
}

fn normalized() -> ChartOptions {
    ChartOptions {
        family: ChartFamily::TemplateNormalized,
        ..Default::default()
    }
}

#[test]
fn leaf_through_the_base_point() {
    let f = heisenberg_f(0.01);
    let p = Point::from_vec(f.manifold, &x0());
    for fl in [Flavor::Stable, Flavor::Unstable] {
        let q = leaf_point(&f, &p, 0.0, fl).unwrap();
        assert_eq!(q.coords, p.coords);
    }
}

#[test]
fn cat3_leaves_are_lines() {
    let m = cat3();
    for fl in [Flavor::Stable, Flavor::Unstable] {
        let leaf = LeafParam::new(&m, &x0(), fl).unwrap();
        for xi in [-0.1, -0.03, 0.05, 0.1] {
            let p = leaf.point(&m, xi).unwrap();
            assert!((p - (x0() + leaf.direction * xi)).norm() < 1e-12);
        }
        let (d1, d2) = leaf.second_order().unwrap();
        assert!((d1 - leaf.direction).norm() < 1e-12 && d2.norm() < 1e-12);
    }
}

#[test]
fn leaf_conjugacy() {
    let xis = grid(0.1, 4);
    for m in [heisenberg_f(0.01), skew(0.05), heisenberg_l()] {
        for fl in [Flavor::Stable, Flavor::Unstable] {
            let r = conjugacy_residual(&m, &x0(), fl, &xis)
                .unwrap_or_else(|e| panic!("{} {fl:?}: {e}", m.name));
            assert!(r <= 1e-8, "{} {fl:?}: {r:e}", m.name);
        }
    }
}

#[test]
fn leaf_curvature_matches_finite_differences() {
    let f = heisenberg_f(0.02);
    for fl in [Flavor::Stable, Flavor::Unstable] {
        let leaf = LeafParam::new(&f, &x0(), fl).unwrap();
        let (_, d2) = leaf.second_order().unwrap();
        let h = 1e-3;
        let fd = (leaf.point(&f, h).unwrap() - 2.0 * x0() + leaf.point(&f, -h).unwrap()) / (h * h);
        assert!(
            (fd - d2).norm() < 1e-3 * (1.0 + d2.norm()),
            "{fl:?}: {fd:?} vs {d2:?}"
        );
    }
}

#[test]
fn chart_axes_lie_on_leaves() {
    let f = heisenberg_f(0.01);
    for family in [
        ChartFamily::Holonomy,
        ChartFamily::LeafSum,
        ChartFamily::TemplateNormalized,
    ] {
        let c = AdaptedChart::build(
            &f,
            &x0(),
            ChartOptions {
                family,
                ..Default::default()
            },
        )
        .unwrap();
        for s in [-0.05, 0.02, 0.08] {
            let a = c.embed(&f, &Vec3::new(s, 0.0, 0.0)).unwrap();
            let b = c.stable.point(&f, s).unwrap();
            assert!(f.manifold.distance(&a, &b) <= 1e-8);
            let a = c.embed(&f, &Vec3::new(0.0, 0.0, s)).unwrap();
            let b = c.unstable.point(&f, s).unwrap();
            assert!(f.manifold.distance(&a, &b) <= 1e-8);
        }
        // center direction of the full chart on the surface
        let v = Vec3::new(0.03, 0.0, -0.04);
        let h = 1e-6;
        let dt =
            (c.embed(&f, &(v + Vec3::new(0.0, h, 0.0))).unwrap() - c.embed(&f, &v).unwrap()) / h;
        let p = c.surface(&f, v.x, v.z).unwrap();
        let ec = compute_splitting(&f, &p, DEFAULT_DEPTH).unwrap().e_c;
        assert!(line_angle(&dt, &ec) <= 1e-6);
    }
}

#[test]
fn cat3_conjugated_map_is_linear() {
    let pair = build_adapted_chart(&cat3(), &x0(), ChartOptions::default()).unwrap();
    for h in &pair.jet.hessians {
        assert!(h.abs().max() <= 1e-10);
    }
    assert!(fh_of(&pair).abs() <= 1e-10);
    assert!(
        fh_coefficient(&cat3(), &Vec3::new(0.7, 0.1, 0.4))
            .unwrap()
            .abs()
            <= 1e-10
    );
}

#[test]
fn conjugated_jacobian_is_diagonal() {
    let f = heisenberg_f(0.01);
    for x in [x0(), Vec3::new(0.81, 0.47, 0.66)] {
        let pair = build_adapted_chart(&f, &x, ChartOptions::default()).unwrap();
        let m = finite_time_exponents(&f, &x, 1).unwrap();
        let j = pair.jet.jacobian;
        let [ls, lc, lu] = pair.multipliers();
        assert!((ls.abs() - m.s).abs() <= 1e-8);
        assert!((lc.abs() - m.c).abs() <= 1e-8);
        assert!((lu.abs() - m.u).abs() <= 1e-8);
        for i in 0..3 {
            for k in 0..3 {
                if i != k {
                    assert!(j[(i, k)].abs() <= 1e-8, "entry ({i},{k}) = {:e}", j[(i, k)]);
                }
            }
        }
    }
}

#[test]
fn fh_chart_change_identity() {
    let f = heisenberg_f(0.01);
    let base = ChartOptions::default();
    let others = [
        ChartOptions {
            family: ChartFamily::LeafSum,
            ..base
        },
        ChartOptions {
            family: ChartFamily::TemplateNormalized,
            center_scale: 1.7,
            ..base
        },
        ChartOptions {
            leaf_depth: 36,
            center_scale: 0.6,
            ..base
        },
    ];
    for x in [x0(), Vec3::new(0.55, 0.9, 0.25)] {
        for b in others {
            let c = chart_change(&f, &x, base, b).unwrap();
            assert!(c.residual <= 1e-6, "{b:?}: {c:?}");
        }
    }
}

#[test]
fn constant_plane_field_has_flat_templates() {
    let m = cat3();
    let pair = build_adapted_chart(&m, &x0(), ChartOptions::default()).unwrap();
    for fl in [Flavor::Stable, Flavor::Unstable] {
        let t = sample_template(&m, &pair.here, fl, &grid(0.1, 10)).unwrap();
        assert!(t.values.iter().all(|v| v.abs() <= 1e-10));
        let r = residual_for_pair(&m, &pair, fl, &[0.01, 0.05, 0.1]).unwrap();
        assert!(r.residual.iter().all(|v| *v <= 1e-10));
    }
}

#[test]
fn templates_vanish_at_the_base_point_and_are_quadratic() {
    let f = heisenberg_f(0.01);
    let g = grid(0.1, 10);
    {
        let pair = build_adapted_chart(&f, &x0(), ChartOptions::default()).unwrap();
        let t = sample_template(&f, &pair.here, Flavor::Stable, &g).unwrap();
        assert_eq!(t.values[10], 0.0);
        let scale = t.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let fit = t.fit.unwrap();
        let worst = g
            .iter()
            .zip(&t.values)
            .map(|(e, v)| (v - (fit[0] + fit[1] * e + fit[2] * e * e)).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-3 * scale, "{worst:e} vs {scale:e}");
    }
    // the normalized family has no linear part
    let pair = build_adapted_chart(&f, &x0(), normalized()).unwrap();
    let t = sample_template(&f, &pair.here, Flavor::Stable, &g).unwrap();
    assert!(t.fit.unwrap()[1].abs() <= 1e-4, "{:?}", t.fit);
}

#[test]
fn template_equation_residual_is_cubic() {
    let f = heisenberg_f(0.01);
    let etas = [0.003, 0.006, 0.0125, 0.025, 0.05, 0.1];
    for fl in [Flavor::Stable, Flavor::Unstable] {
        let r = template_equation_residual(&f, &x0(), fl, &etas, ChartOptions::default()).unwrap();
        assert!(r.slope.unwrap() >= 2.5, "{fl:?}: {:?}", r.slope);
        let z = template_equation_residual(&f, &x0(), fl, &[0.0], ChartOptions::default()).unwrap();
        assert!(z.residual[0] <= 1e-10);
    }
}

#[test]
fn grid_outside_the_leaf_radius_is_refused() {
    let f = heisenberg_f(0.01);
    let r = template_equation_residual(&f, &x0(), Flavor::Stable, &[0.3], ChartOptions::default());
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn bootstrap_series_matches_the_template() {
    let f = heisenberg_f(0.01);
    let g = grid(0.05, 10);
    let r = reconstruct_template_series(&f, &x0(), 20, &g, normalized()).unwrap();
    assert!(r.sup_difference <= 1e-4, "{:e}", r.sup_difference);
    assert!(r.decay_ratio < DECAY_LIMIT);
    let zero = reconstruct_template_series(&f, &x0(), 0, &g, normalized()).unwrap();
    let sup = zero.template.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(zero.series.iter().all(|v| *v == 0.0));
    assert_eq!(zero.sup_difference, sup);
}

#[test]
fn cat3_bootstrap_is_zero() {
    let r = reconstruct_template_series(&cat3(), &x0(), 20, &grid(0.05, 10), normalized()).unwrap();
    assert!(r.series.iter().all(|v| v.abs() <= 1e-12));
    assert!(r.sup_difference <= 1e-10);
}

#[test]
fn non_decaying_series_is_refused() {
    // conservative base with a center expanding nearly as fast as the unstable bundle
    let m = [[0.5, 1.95, 2.0]; 10];
    assert!(matches!(series_weights(&m), Err(Error::Precondition(_))));
    let (w, ratio) = series_weights(&[[0.4, 1.0, 2.5]; 10]).unwrap();
    assert!((ratio - 0.4).abs() < 1e-12);
    assert!((w[1].0 - 6.25).abs() < 1e-12 && (w[1].1 - 0.16).abs() < 1e-12);
}

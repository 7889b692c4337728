use std::time::Instant;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::heisenberg::{
    continuation_defect, fiber_return_spread, p0_periodicity_defect, rotation_derivative_at_zero,
    rotation_derivative_closed_form, rotation_number,
};
use super::report::{Bound, Check, Report, Table, SCHEMA};
use crate::calculus::parse_expr;
use crate::cocycles::{
    fh_along_orbit, fit_twisted_coboundary, periodic_obstruction, TwistedCocycle,
};
use crate::contact::{contact_report, su_gap_sweep};
use crate::geometry::{OneForm, Params, VolumeForm};
use crate::maps::{find_periodic_orbits, MapSpec};
use crate::normalform::{
    loglog_slope, reconstruct_template_series, template_equation_residual, ChartFamily,
    ChartOptions, Flavor,
};
use crate::rng::unit_points;
use crate::splitting::{
    certify_partial_hyperbolicity, compute_splitting, estimate_plane_regularity, line_angle,
    lyapunov_exponents, sample_pairs, DEFAULT_DEPTH,
};
use crate::{Error, Result, Vec3};

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    map: MapSpec,
    checks: Vec<Check>,
    tables: Vec<Table>,
}

impl Run<'_> {
    fn samples(&self) -> Vec<Vec3> {
        unit_points(self.cfg.experiment.seed, self.cfg.sampling.samples)
    }

    fn point(&self) -> Vec3 {
        Vec3::from(self.cfg.sampling.point)
    }

    /// Records a check; module errors become failed checks and the run goes on.
    fn check(&mut self, name: &str, bound: Bound, measure: impl FnOnce() -> Result<f64>) {
        let bound = match bound {
            Bound::AtMost { value } => Bound::at_most(self.cfg.tolerance(name, value)),
            Bound::AtLeast { value } => Bound::at_least(self.cfg.tolerance(name, value)),
            b => b,
        };
        let c = match measure() {
            Ok(v) => Check {
                name: name.into(),
                bound,
                measured: v,
                passed: bound.holds(v),
                error: None,
            },
            Err(e) => Check {
                name: name.into(),
                bound,
                measured: f64::NAN,
                passed: false,
                error: Some(e.to_string()),
            },
        };
        self.checks.push(c);
    }

    fn alpha(&self) -> Result<OneForm> {
        self.cfg
            .alpha()?
            .ok_or_else(|| Error::Precondition(format!("{} has no contact form", self.map.name)))
    }

    fn volume(&self) -> Result<VolumeForm> {
        Ok(match &self.cfg.forms.volume {
            None => VolumeForm::standard(),
            Some(v) => VolumeForm::Coeff {
                coeff: parse_expr(v)?,
                params: Params::new(),
            },
        })
    }
}

fn max_over(points: &[Vec3], f: impl Fn(&Vec3) -> Result<f64> + Sync + Send) -> Result<f64> {
    points
        .par_iter()
        .map(f)
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

fn volume_defect(map: &MapSpec, pts: &[Vec3]) -> Result<f64> {
    max_over(pts, |p| Ok((map.jacobian(p)?.determinant() - 1.0).abs()))
}

fn contact_defect(map: &MapSpec, alpha: &OneForm, pts: &[Vec3]) -> Result<f64> {
    max_over(pts, |p| {
        let pulled = map.jacobian(p)?.transpose() * alpha.at(&map.lift(p)?)?;
        Ok((pulled - alpha.at(p)?).norm())
    })
}

fn verify(run: &mut Run) {
    let pts = run.samples();
    let map = run.map.clone();
    run.check("inverse_roundtrip", Bound::at_most(1e-10), || {
        max_over(&pts, |p| Ok((map.lift_inverse(&map.lift(p)?)? - p).norm()))
    });
    run.check("deck_commutation", Bound::at_most(1e-10), || {
        map.deck_commutation_residual(&pts)
    });
    if map.volume_preserving {
        run.check("volume", Bound::at_most(1e-12), || {
            volume_defect(&map, &pts)
        });
    }
    if let Some(alpha) = map.contact_form.clone() {
        run.check("contact_invariance", Bound::at_most(1e-10), || {
            contact_defect(&map, &alpha, &pts)
        });
    }
    let few = &pts[..pts.len().min(20)];
    run.check("splitting_invariance", Bound::at_most(1e-8), || {
        max_over(few, |p| {
            let (fp, _) = map.step(p)?;
            let (a, b) = (
                compute_splitting(&map, p, DEFAULT_DEPTH)?,
                compute_splitting(&map, &fp, DEFAULT_DEPTH)?,
            );
            let j = map.jacobian(p)?;
            Ok(line_angle(&(j * a.e_s), &b.e_s)
                .max(line_angle(&(j * a.e_c), &b.e_c))
                .max(line_angle(&(j * a.e_u), &b.e_u)))
        })
    });
}

fn exponents(run: &mut Run) {
    let pts = run.samples();
    let map = run.map.clone();
    let steps = run.cfg.sampling.steps;
    let reports = pts
        .par_iter()
        .map(|p| lyapunov_exponents(&map, p, steps, 1))
        .collect::<Result<Vec<_>>>();
    let reports = match reports {
        Ok(r) => r,
        Err(e) => {
            run.check("exponents", Bound::at_most(0.0), || Err(e));
            return;
        }
    };
    let mut t = Table::new(
        "exponents",
        &[
            "x",
            "y",
            "z",
            "chi_s",
            "chi_c",
            "chi_u",
            "stderr_s",
            "stderr_c",
            "stderr_u",
            "mean_log_det",
        ],
    );
    for r in &reports {
        t.push(vec![
            r.point.x,
            r.point.y,
            r.point.z,
            r.chi_s,
            r.chi_c,
            r.chi_u,
            r.stderr_s,
            r.stderr_c,
            r.stderr_u,
            r.mean_log_det,
        ]);
    }
    run.tables.push(t);
    if map.volume_preserving {
        run.check("exponent_sum", Bound::at_most(2e-6), || {
            Ok(reports
                .iter()
                .map(|r| (r.chi_s + r.chi_c + r.chi_u).abs())
                .fold(0.0, f64::max))
        });
    }
    if map.name == "cat3" {
        let golden = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        run.check("cat3_unstable_exponent", Bound::at_most(1e-6), || {
            Ok(reports
                .iter()
                .map(|r| (r.chi_u - golden).abs())
                .fold(0.0, f64::max))
        });
    }
}

fn regularity(run: &mut Run) {
    let map = run.map.clone();
    let seed = run.cfg.experiment.seed;
    let pts = run.samples();
    let cert = certify_partial_hyperbolicity(&map, &pts[..pts.len().min(50)], 20, 1.0);
    run.check(
        "partial_hyperbolicity_margin",
        Bound::at_least(1e-12),
        || {
            cert.as_ref()
                .map(|c| c.margin_s.min(c.margin_u))
                .map_err(Clone::clone)
        },
    );
    let pairs = sample_pairs(seed, run.cfg.sampling.samples, 1e-4, 1e-2);
    match estimate_plane_regularity(&map, &pairs) {
        Ok(r) => {
            let mut t = Table::new(
                "regularity",
                &[
                    "holder_exponent",
                    "raw_slope",
                    "slope_lo",
                    "slope_hi",
                    "lipschitz",
                    "fit_r2",
                    "pairs",
                ],
            );
            t.push(vec![
                r.holder_exponent,
                r.raw_slope,
                r.slope_ci[0],
                r.slope_ci[1],
                r.lipschitz_constant,
                r.fit_r2,
                r.pairs_used as f64,
            ]);
            run.tables.push(t);
            run.check("holder_exponent", Bound::within(0.0, 1.0), || {
                Ok(r.holder_exponent)
            });
        }
        Err(e) => run.check("holder_exponent", Bound::within(0.0, 1.0), || Err(e)),
    }
    if let Ok(c) = cert {
        let mut t = Table::new(
            "certificate",
            &[
                "k",
                "margin_s",
                "margin_u",
                "r",
                "r_bunched",
                "strongly_r_bunched",
            ],
        );
        t.push(vec![
            c.k as f64,
            c.margin_s,
            c.margin_u,
            c.r,
            c.r_bunched as u8 as f64,
            c.strongly_r_bunched as u8 as f64,
        ]);
        run.tables.push(t);
    }
}

fn normalized() -> ChartOptions {
    ChartOptions {
        family: ChartFamily::TemplateNormalized,
        ..Default::default()
    }
}

fn templates(run: &mut Run) {
    let map = run.map.clone();
    let x = run.point();
    let etas = [0.003, 0.006, 0.0125, 0.025, 0.05, 0.1];
    let mut t = Table::new(
        "template_residual",
        &["flavor", "eta", "off_diagonal", "predicted", "residual"],
    );
    for (code, fl) in [(0.0, Flavor::Stable), (1.0, Flavor::Unstable)] {
        let name = format!("template_equation_{}", if code == 0.0 { "s" } else { "u" });
        match template_equation_residual(&map, &x, fl, &etas, ChartOptions::default()) {
            Ok(r) => {
                for i in 0..r.eta.len() {
                    t.push(vec![
                        code,
                        r.eta[i],
                        r.off_diagonal[i],
                        r.predicted[i],
                        r.residual[i],
                    ]);
                }
                let worst = r.residual.iter().copied().fold(0.0, f64::max);
                if worst <= 1e-10 {
                    // flat plane field: nothing to fit
                    run.check(&format!("{name}_max"), Bound::at_most(1e-10), || Ok(worst));
                } else {
                    run.check(&format!("{name}_slope"), Bound::at_least(2.5), || {
                        r.slope.ok_or_else(|| Error::Degenerate("no slope".into()))
                    });
                }
            }
            Err(e) => run.check(&name, Bound::at_least(2.5), || Err(e)),
        }
    }
    run.tables.push(t);
    let grid: Vec<f64> = (-10..=10).map(|i| 0.005 * i as f64).collect();
    let series = reconstruct_template_series(&map, &x, 20, &grid, normalized());
    if let Ok(s) = &series {
        let mut t = Table::new("bootstrap", &["eta", "series", "template"]);
        for i in 0..s.eta.len() {
            t.push(vec![s.eta[i], s.series[i], s.template[i]]);
        }
        run.tables.push(t);
    }
    run.check("bootstrap_sup_difference", Bound::at_most(1e-4), || {
        series.map(|s| s.sup_difference)
    });
}

fn family(run: &Run) -> Result<ChartFamily> {
    let f = &run.cfg.sampling.family;
    ChartFamily::parse(f).ok_or_else(|| Error::Config {
        path: "sampling.family".into(),
        message: format!("unknown chart family `{f}`"),
    })
}

fn fh(run: &mut Run) {
    let map = run.map.clone();
    let cfg = run.cfg;
    let mut orbits = vec![];
    for p in 1..=cfg.sampling.max_period {
        match find_periodic_orbits(&map, p, cfg.sampling.grid, 1e-12) {
            Ok(o) => orbits.extend(
                o.into_iter()
                    .filter(|o| o.period == p && o.residual <= 1e-10),
            ),
            Err(e) => {
                run.check("periodic_orbits", Bound::at_least(1.0), || Err(e));
                return;
            }
        }
    }
    let fams = [ChartFamily::Holonomy, ChartFamily::TemplateNormalized];
    let cocycles = fams.map(|f| {
        TwistedCocycle::fh(
            &map,
            ChartOptions {
                family: f,
                ..Default::default()
            },
        )
    });
    let results = orbits
        .par_iter()
        .map(|o| {
            let a = periodic_obstruction(&cocycles[0], o)?;
            let b = periodic_obstruction(&cocycles[1], o)?;
            Ok((a, b))
        })
        .collect::<Result<Vec<_>>>();
    let results = match results {
        Ok(r) => r,
        Err(e) => {
            run.check("obstruction_class_invariance", Bound::at_most(1e-6), || {
                Err(e)
            });
            return;
        }
    };
    let mut t = Table::new(
        "obstructions",
        &[
            "orbit",
            "period",
            "twist_product",
            "sum_holonomy",
            "sum_normalized",
            "well_defined",
            "spread",
        ],
    );
    let (mut worst_diff, mut worst_value): (f64, f64) = (0.0, 0.0);
    for (i, (a, b)) in results.iter().enumerate() {
        t.push(vec![
            i as f64,
            a.period as f64,
            a.twist_product,
            a.value,
            b.value,
            a.well_defined as u8 as f64,
            a.spread.max(b.spread),
        ]);
        if a.well_defined {
            worst_diff = worst_diff.max((a.value - b.value).abs());
            worst_value = worst_value.max(a.value.abs()).max(b.value.abs());
        }
    }
    run.tables.push(t);
    let n = results.len();
    run.check("periodic_orbits", Bound::at_least(1.0), || Ok(n as f64));
    run.check("obstruction_class_invariance", Bound::at_most(1e-6), || {
        Ok(worst_diff)
    });
    if map.contact_form.is_some() {
        run.check("obstruction_vanishes", Bound::at_most(1e-6), || {
            Ok(worst_value)
        });
    }
    let fam = family(run);
    let len = cfg.sampling.orbit_length;
    run.check("coboundary_fit", Bound::at_most(1e-4), || {
        let options = ChartOptions {
            family: fam?,
            ..Default::default()
        };
        let data = fh_along_orbit(&map, &Vec3::from(cfg.sampling.point), len, options)?;
        Ok(fit_twisted_coboundary(&data, 4)?.residual)
    });
}

fn contact(run: &mut Run) {
    let map = run.map.clone();
    let pts = run.samples();
    let report = run
        .alpha()
        .and_then(|a| Ok((a, run.volume()?)))
        .and_then(|(a, m)| contact_report(&map, &a, &m, &pts));
    match report {
        Ok(r) => {
            let mut t = Table::new(
                "contact",
                &[
                    "x",
                    "y",
                    "z",
                    "rho",
                    "rho_residual",
                    "h",
                    "hrho_residual",
                    "reeb_x",
                    "reeb_y",
                    "reeb_z",
                    "center_angle",
                ],
            );
            for i in 0..r.points.len() {
                let [x, y, z] = r.points[i];
                let [a, b, c] = r.reeb[i];
                t.push(vec![
                    x,
                    y,
                    z,
                    r.rho[i],
                    r.rho_residuals[i],
                    r.h[i],
                    r.hrho_residuals[i],
                    a,
                    b,
                    c,
                    r.center_angles[i],
                ]);
            }
            run.tables.push(t);
            run.check("pullback_ratio", Bound::at_most(1e-12), || {
                Ok(r.max_rho_residual())
            });
            run.check("density_identity", Bound::at_most(1e-10), || {
                Ok(r.max_hrho_residual())
            });
            run.check("reeb_center_angle", Bound::at_most(1e-6), || {
                Ok(r.max_center_angle())
            });
        }
        Err(e) => run.check("pullback_ratio", Bound::at_most(1e-12), || Err(e)),
    }
}

fn sugap(run: &mut Run) {
    let map = run.map.clone();
    let eps = run.cfg.sampling.eps.clone();
    let alpha = run.cfg.alpha().ok().flatten();
    let runs = su_gap_sweep(&map, &run.point(), &eps, alpha.as_ref());
    let runs = match runs {
        Ok(r) => r,
        Err(e) => {
            run.check("su_gap", Bound::at_most(0.0), || Err(e));
            return;
        }
    };
    let mut t = Table::new("sugap", &["eps", "gap", "loop_integral"]);
    for r in &runs {
        t.push(vec![r.eps, r.gap, r.loop_integral.unwrap_or(f64::NAN)]);
    }
    run.tables.push(t);
    let gaps: Vec<f64> = runs.iter().map(|r| r.gap).collect();
    if map.contact_form.is_some() {
        run.check("su_gap_slope", Bound::within(1.8, 2.2), || {
            loglog_slope(&eps, &gaps).ok_or_else(|| Error::Degenerate("gap slope".into()))
        });
        let ratios: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.loop_integral.map(|l| (l / (r.eps * r.eps)).abs()))
            .collect();
        if !ratios.is_empty() {
            run.check("loop_integral_ratio_spread", Bound::at_most(0.2), || {
                let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = ratios.iter().copied().fold(0.0, f64::max);
                Ok(hi / lo - 1.0)
            });
        }
    } else {
        run.check("su_gap_closed", Bound::at_most(1e-8), || {
            Ok(gaps.iter().copied().fold(0.0, f64::max))
        });
    }
}

fn heisenberg(run: &mut Run) {
    let map = run.map.clone();
    let pts = run.samples();
    let alpha = run.alpha();
    run.check("contact_invariance", Bound::at_most(1e-10), || {
        contact_defect(&map, &alpha?, &pts)
    });
    run.check("volume", Bound::at_most(1e-12), || {
        volume_defect(&map, &pts)
    });
    run.check("p0_periodicity", Bound::at_most(1e-14), || {
        Ok(p0_periodicity_defect())
    });

    let eps: Vec<f64> = (0..=8).map(|i| 1e-3 * 10f64.powf(i as f64 / 4.0)).collect();
    let defect = continuation_defect(&eps);
    if let Ok(d) = &defect {
        let mut t = Table::new("continuation", &["eps", "defect"]);
        for (e, v) in d.eps.iter().zip(&d.defect) {
            t.push(vec![*e, *v]);
        }
        run.tables.push(t);
    }
    run.check("continuation_slope", Bound::within(1.8, 2.2), || {
        defect?
            .slope
            .ok_or_else(|| Error::Degenerate("defect slope".into()))
    });

    run.check("rotation_at_zero", Bound::at_most(1e-14), || {
        Ok((rotation_number(0.0)?.value - 0.5).abs())
    });
    let exact = rotation_derivative_closed_form();
    let hs = [1e-4, 2e-4, 4e-4];
    let fd: Vec<Result<f64>> = hs.iter().map(|h| rotation_derivative_at_zero(*h)).collect();
    let mut t = Table::new(
        "rotation_derivative",
        &["h", "finite_difference", "closed_form", "error"],
    );
    for (h, d) in hs.iter().zip(&fd) {
        if let Ok(d) = d {
            t.push(vec![*h, *d, exact, d - exact]);
        }
    }
    run.tables.push(t);
    let first = fd[0].clone();
    run.check("rotation_derivative", Bound::at_most(1e-6), || {
        Ok((first? - exact).abs())
    });
    run.check(
        "rotation_derivative_second_order",
        Bound::at_most(0.3),
        || {
            let scaled: Vec<f64> = hs
                .iter()
                .zip(fd)
                .map(|(h, d)| Ok((d? - exact).abs() / (h * h)))
                .collect::<Result<_>>()?;
            let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = scaled.iter().copied().fold(0.0, f64::max);
            Ok(hi / lo - 1.0)
        },
    );
    let e = map.param("eps").unwrap_or(crate::maps::DEFAULT_EPS);
    let mut t = Table::new("rotation", &["eps", "lift", "value", "tau_p", "tau_q"]);
    for eps in [0.0, e] {
        if let Ok(r) = rotation_number(eps) {
            t.push(vec![r.eps, r.lift, r.value, r.tau_p, r.tau_q]);
        }
    }
    run.tables.push(t);
    run.check("fiber_return_rigid", Bound::at_most(1e-12), || {
        Ok(fiber_return_spread(e, 10)?.0)
    });
}

/// Executes the configured pipeline. Module errors are recorded per check.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut run = Run {
        cfg,
        map: cfg.build_map()?,
        checks: vec![],
        tables: vec![],
    };
    match cfg.experiment.pipeline.as_str() {
        "verify" => verify(&mut run),
        "exponents" => exponents(&mut run),
        "regularity" => regularity(&mut run),
        "templates" => templates(&mut run),
        "fh" => fh(&mut run),
        "contact" => contact(&mut run),
        "sugap" => sugap(&mut run),
        "heisenberg" => heisenberg(&mut run),
        other => unreachable!("validated pipeline {other}"),
    }
    Ok(Report {
        schema: SCHEMA,
        id: cfg.experiment.id.clone(),
        pipeline: cfg.experiment.pipeline.clone(),
        map: run.map.name.clone(),
        seed: cfg.experiment.seed,
        config: cfg.clone(),
        checks: run.checks,
        tables: run.tables,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

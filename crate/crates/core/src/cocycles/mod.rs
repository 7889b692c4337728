//! Additive and twisted cocycles over a map, periodic obstructions and
//! Livshits-type tests.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{parse_expr_with, Compiled};
use crate::maps::{MapSpec, Orbit, PeriodicOrbit};
use crate::normalform::{fh_of, pair_from, AdaptedChart, ChartOptions};
use crate::splitting::{compute_splitting, finite_time_with, DEFAULT_DEPTH};
use crate::{Error, Result, Vec3};

type Generator = Arc<dyn Fn(&Vec3) -> Result<f64> + Send + Sync>;

#[derive(Clone)]
pub struct AdditiveCocycle {
    pub label: String,
    generator: Generator,
}

impl fmt::Debug for AdditiveCocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AdditiveCocycle({})", self.label)
    }
}

fn compile_xyz(text: &str) -> Result<Compiled> {
    parse_expr_with(text, &[])?.compile(&[])
}

fn expr_fn(text: &str) -> Result<impl Fn(&Vec3) -> Result<f64> + Send + Sync + Clone> {
    let c = Arc::new(compile_xyz(text)?);
    Ok(move |p: &Vec3| c.eval(&[p.x, p.y, p.z], &[]))
}

impl AdditiveCocycle {
    pub fn from_fn(label: &str, f: impl Fn(&Vec3) -> Result<f64> + Send + Sync + 'static) -> Self {
        AdditiveCocycle {
            label: label.to_string(),
            generator: Arc::new(f),
        }
    }

    /// Generator given as an expression in `x, y, z`.
    pub fn from_expr(text: &str) -> Result<Self> {
        Ok(Self::from_fn(text, expr_fn(text)?))
    }

    /// `Φ∘f − Φ` for a function `Φ` on the quotient.
    pub fn coboundary(map: &MapSpec, phi: &str) -> Result<Self> {
        let phi = expr_fn(phi)?;
        let map = map.clone();
        Ok(Self::from_fn("coboundary", move |p| {
            Ok(phi(&map.step(p)?.0)? - phi(p)?)
        }))
    }

    /// `log |det Df|`.
    pub fn log_det(map: &MapSpec) -> Self {
        let map = map.clone();
        Self::from_fn("log|det Df|", move |p| {
            Ok(map.jacobian(p)?.determinant().abs().ln())
        })
    }

    /// `log |det Df|` restricted to the first two coordinates (the base of a fibered map).
    pub fn log_det_base(map: &MapSpec) -> Self {
        let map = map.clone();
        Self::from_fn("log|det Df|_S|", move |p| {
            let j = map.jacobian(p)?;
            Ok((j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)]).abs().ln())
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::from_fn("constant", move |_| Ok(c))
    }

    pub fn eval(&self, p: &Vec3) -> Result<f64> {
        (self.generator)(p)
    }
}

#[derive(Clone)]
pub struct TwistedCocycle {
    pub label: String,
    generator: Generator,
    twist: Generator,
}

impl fmt::Debug for TwistedCocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TwistedCocycle({})", self.label)
    }
}

impl TwistedCocycle {
    pub fn new(
        label: &str,
        generator: impl Fn(&Vec3) -> Result<f64> + Send + Sync + 'static,
        twist: impl Fn(&Vec3) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        TwistedCocycle {
            label: label.to_string(),
            generator: Arc::new(generator),
            twist: Arc::new(twist),
        }
    }

    /// Untwisted view of an additive cocycle.
    pub fn untwisted(c: &AdditiveCocycle) -> Self {
        TwistedCocycle {
            label: c.label.clone(),
            generator: c.generator.clone(),
            twist: Arc::new(|_| Ok(1.0)),
        }
    }

    /// `α = λ·β∘f − β` with twist `λ` and `β` given as expressions.
    pub fn coboundary(map: &MapSpec, beta: &str, twist: &str) -> Result<Self> {
        let b = expr_fn(beta)?;
        let l = expr_fn(twist)?;
        let l2 = l.clone();
        let map = map.clone();
        Ok(Self::new(
            "twisted coboundary",
            move |p| Ok(l(p)? * b(&map.step(p)?.0)? - b(p)?),
            l2,
        ))
    }

    /// The `α^FH` cocycle in the given chart family, twisted by `λ^s λ^u / λ^c∘f`.
    pub fn fh(map: &MapSpec, options: ChartOptions) -> Self {
        let (m1, m2) = (map.clone(), map.clone());
        Self::new(
            "alpha_FH",
            move |p| crate::normalform::fh_coefficient_with(&m1, p, options),
            move |p| fh_twist(&m2, p),
        )
    }

    pub fn alpha(&self, p: &Vec3) -> Result<f64> {
        (self.generator)(p)
    }

    pub fn twist(&self, p: &Vec3) -> Result<f64> {
        (self.twist)(p)
    }
}

/// `λ_x = λ^s_x λ^u_x / λ^c_{f(x)}`.
pub fn fh_twist(map: &MapSpec, x: &Vec3) -> Result<f64> {
    let sx = compute_splitting(map, x, DEFAULT_DEPTH)?;
    let fx = map.step(x)?.0;
    let sfx = compute_splitting(map, &fx, DEFAULT_DEPTH)?;
    let here = finite_time_with(map, &sx, 1)?;
    let there = finite_time_with(map, &sfx, 1)?;
    Ok(here.s * here.u / there.c)
}

// α and λ at f^k x for k in range, read from one orbit segment
fn samples(
    tc: &TwistedCocycle,
    map: &MapSpec,
    x: &Vec3,
    back: usize,
    fwd: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let orbit = Orbit::new(map, x, back, fwd)?;
    let pts = orbit.points.clone();
    let vals: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|p| Ok((tc.alpha(p)?, tc.twist(p)?)))
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().unzip())
}

/// `λ_x(n)`, the multiplicative cocycle generated by the twist.
pub fn twist_product(tc: &TwistedCocycle, map: &MapSpec, x: &Vec3, n: i64) -> Result<f64> {
    let k = n.unsigned_abs() as usize;
    if n >= 0 {
        let (_, l) = samples(tc, map, x, 0, k)?;
        Ok(l[..k].iter().product())
    } else {
        let (_, l) = samples(tc, map, x, k, 0)?;
        Ok(l[..k].iter().map(|v| 1.0 / v).product())
    }
}

fn twisted_from(alpha: &[f64], twist: &[f64], origin: usize, n: i64) -> f64 {
    let mut sum = 0.0;
    let mut lam = 1.0;
    if n >= 0 {
        for l in 0..n as usize {
            sum += lam * alpha[origin + l];
            lam *= twist[origin + l];
        }
        sum
    } else {
        for l in 1..=n.unsigned_abs() as usize {
            lam /= twist[origin - l];
            sum += lam * alpha[origin - l];
        }
        -sum
    }
}

/// `α_x(n)`: `Σ_{ℓ<n} λ_x(ℓ) α(f^ℓ x)` for `n ≥ 0`,
/// `−Σ_{ℓ=1}^{−n} λ_x(−ℓ) α(f^{−ℓ} x)` for `n < 0`.
pub fn twisted_sum(tc: &TwistedCocycle, map: &MapSpec, x: &Vec3, n: i64) -> Result<f64> {
    let k = n.unsigned_abs() as usize;
    let (a, l) = if n >= 0 {
        samples(tc, map, x, 0, k)?
    } else {
        samples(tc, map, x, k, 0)?
    };
    Ok(twisted_from(&a, &l, if n >= 0 { 0 } else { k }, n))
}

/// `Σ_{k<n} c(f^k x)`; negative `n` follows the twisted definition with unit twist.
pub fn birkhoff_sum(c: &AdditiveCocycle, map: &MapSpec, x: &Vec3, n: i64) -> Result<f64> {
    twisted_sum(&TwistedCocycle::untwisted(c), map, x, n)
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicObstruction {
    pub period: usize,
    pub points: Vec<Vec3>,
    /// Twisted sum over one period started at the first point.
    pub value: f64,
    pub twist_product: f64,
    pub well_defined: bool,
    /// Max deviation of the sums started at the other orbit points.
    pub spread: f64,
    pub sums: Vec<f64>,
}

pub const WELL_DEFINED_TOL: f64 = 1e-8;

pub fn periodic_obstruction(
    tc: &TwistedCocycle,
    orbit: &PeriodicOrbit,
) -> Result<PeriodicObstruction> {
    if !(orbit.residual <= 1e-10) {
        return Err(Error::Precondition(format!(
            "periodic orbit residual {:e} above 1e-10",
            orbit.residual
        )));
    }
    let pts = orbit.vecs();
    let n = orbit.period;
    let vals: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|p| Ok((tc.alpha(p)?, tc.twist(p)?)))
        .collect::<Result<_>>()?;
    let (a, l): (Vec<f64>, Vec<f64>) = vals.into_iter().unzip();
    let (a2, l2) = ([a.clone(), a].concat(), [l.clone(), l.clone()].concat());
    let sums: Vec<f64> = (0..n)
        .map(|i| twisted_from(&a2, &l2, i, n as i64))
        .collect();
    let twist_product: f64 = l.iter().product();
    let spread = sums.iter().map(|s| (s - sums[0]).abs()).fold(0.0, f64::max);
    Ok(PeriodicObstruction {
        period: n,
        points: pts,
        value: sums[0],
        twist_product,
        well_defined: (twist_product - 1.0).abs() <= WELL_DEFINED_TOL,
        spread,
        sums,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    AllZero,
    AllNonnegative,
    Mixed,
}

#[derive(Clone, Debug, Serialize)]
pub struct LivshitsReport {
    pub verdict: Verdict,
    pub sums: Vec<f64>,
    /// Orbit index and value: the largest `|sum|/period` when all vanish, the minimum sum otherwise.
    pub worst_orbit: usize,
    pub worst_value: f64,
}

pub const LIVSHITS_TOL: f64 = 1e-10;

/// Sign pattern of `Σ_{p ∈ orbit} c(p)` over periodic orbits.
pub fn livshits_sign_test(c: &AdditiveCocycle, orbits: &[PeriodicOrbit]) -> Result<LivshitsReport> {
    if orbits.is_empty() {
        return Err(Error::Precondition(
            "livshits test needs at least one orbit".into(),
        ));
    }
    let sums: Vec<f64> = orbits
        .par_iter()
        .map(|o| o.vecs().iter().map(|p| c.eval(p)).sum::<Result<f64>>())
        .collect::<Result<_>>()?;
    let zero = sums
        .iter()
        .zip(orbits)
        .all(|(s, o)| s.abs() <= LIVSHITS_TOL * o.period as f64);
    if zero {
        let (i, v) = sums
            .iter()
            .zip(orbits)
            .map(|(s, o)| s.abs() / o.period as f64)
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        return Ok(LivshitsReport {
            verdict: Verdict::AllZero,
            worst_orbit: i,
            worst_value: v,
            sums,
        });
    }
    let (i, v) = sums
        .iter()
        .copied()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
        );
    let nonneg = sums
        .iter()
        .zip(orbits)
        .all(|(s, o)| *s >= -LIVSHITS_TOL * o.period as f64);
    let verdict = if nonneg {
        Verdict::AllNonnegative
    } else {
        Verdict::Mixed
    };
    Ok(LivshitsReport {
        verdict,
        worst_orbit: i,
        worst_value: v,
        sums,
    })
}

/// `max_i |α_i − (λ_i β_{i+1} − β_i)|` along an orbit segment with `α, λ` at
/// `x_0..x_{N-1}` and `β` at `x_0..x_N`.
pub fn coboundary_residual(alpha: &[f64], twist: &[f64], beta: &[f64]) -> Result<f64> {
    if alpha.len() != twist.len() || beta.len() != alpha.len() + 1 {
        return Err(Error::Precondition(
            "β needs one more sample than α and λ".into(),
        ));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFinite("β samples".into()));
    }
    Ok((0..alpha.len())
        .map(|i| (alpha[i] - (twist[i] * beta[i + 1] - beta[i])).abs())
        .fold(0.0, f64::max))
}

/// FH cocycle and twist along `x_0..x_n` (the last point only as an image),
/// building each chart once.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitCocycle {
    pub points: Vec<Vec3>,
    pub alpha: Vec<f64>,
    pub twist: Vec<f64>,
}

pub fn fh_along_orbit(
    map: &MapSpec,
    x: &Vec3,
    n: usize,
    options: ChartOptions,
) -> Result<OrbitCocycle> {
    let orbit = Orbit::new(map, x, 0, n + 1)?;
    let charts: Vec<AdaptedChart> = (0..=n)
        .into_par_iter()
        .map(|k| AdaptedChart::build(map, &orbit.at(k as isize), options))
        .collect::<Result<_>>()?;
    let splittings: Vec<_> = (0..=n + 1)
        .into_par_iter()
        .map(|k| compute_splitting(map, &orbit.at(k as isize), DEFAULT_DEPTH))
        .collect::<Result<_>>()?;
    let out: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let pair = pair_from(
                map,
                charts[k].clone(),
                charts[k + 1].clone(),
                orbit.deck(k as isize),
            )?;
            let here = finite_time_with(map, &splittings[k], 1)?;
            let there = finite_time_with(map, &splittings[k + 1], 1)?;
            Ok((fh_of(&pair), here.s * here.u / there.c))
        })
        .collect::<Result<_>>()?;
    let (alpha, twist) = out.into_iter().unzip();
    Ok(OrbitCocycle {
        points: (0..=n).map(|k| orbit.at(k as isize)).collect(),
        alpha,
        twist,
    })
}

/// Trigonometric basis on the base torus: `cos, sin(2π(jx + ky))` for `|j|, |k| ≤ order`.
fn basis(p: &Vec3, order: i32) -> Vec<f64> {
    let mut out = vec![1.0];
    for j in -order..=order {
        for k in 0..=order {
            if k == 0 && j <= 0 {
                continue;
            }
            let a = 2.0 * std::f64::consts::PI * (j as f64 * p.x + k as f64 * p.y);
            out.push(a.cos());
            out.push(a.sin());
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct CoboundaryFit {
    pub coefficients: Vec<f64>,
    pub beta: Vec<f64>,
    pub residual: f64,
}

/// Plain least-squares `β` in a trigonometric basis with `α ≈ λ β∘f − β` on the orbit graph.
pub fn fit_twisted_coboundary(data: &OrbitCocycle, order: i32) -> Result<CoboundaryFit> {
    let n = data.alpha.len();
    let rows: Vec<Vec<f64>> = data.points.iter().map(|p| basis(p, order)).collect();
    let m = rows[0].len();
    if n < m {
        return Err(Error::Precondition(format!(
            "{n} samples cannot fit {m} basis functions"
        )));
    }
    let a = DMatrix::from_fn(n, m, |i, j| data.twist[i] * rows[i + 1][j] - rows[i][j]);
    let b = DVector::from_column_slice(&data.alpha);
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Degenerate(format!("coboundary fit: {e}")))?;
    let beta: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().zip(coef.iter()).map(|(x, c)| x * c).sum())
        .collect();
    let residual = coboundary_residual(&data.alpha, &data.twist, &beta)?;
    Ok(CoboundaryFit {
        coefficients: coef.iter().copied().collect(),
        beta,
        residual,
    })
}

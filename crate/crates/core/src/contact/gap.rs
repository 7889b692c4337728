use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::OneForm;
use crate::maps::MapSpec;
use crate::normalform::{Flavor, LeafParam};
use crate::splitting::{compute_splitting, DEFAULT_DEPTH};
use crate::{Error, Result, Vec3};

/// Every leafwise parameter is `GAP_PARAM · ε`.
pub const GAP_PARAM: f64 = 1.5;
pub const MAX_GAP_EPS: f64 = 0.05;
const CLOSE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct SuGap {
    pub eps: f64,
    pub x: [f64; 3],
    pub y: [f64; 3],
    pub z: [f64; 3],
    pub w1: [f64; 3],
    pub w2: [f64; 3],
    /// Stable parameter of `w₂` on the leaf through `z`.
    pub t: f64,
    /// Quotient distance `d(w₁, w₂)`.
    pub gap: f64,
    /// `∮ α` around x → y → w₁ → w₂ → z → x, when a form was given.
    pub loop_integral: Option<f64>,
}

// midpoint rule on the chord polygon through `pts`
fn integrate(alpha: &OneForm, pts: &[Vec3]) -> Result<f64> {
    pts.windows(2)
        .map(|w| Ok(alpha.at(&(0.5 * (w[0] + w[1])))?.dot(&(w[1] - w[0]))))
        .sum()
}

fn nodes(len: f64, eps: f64) -> usize {
    ((100.0 * len / eps).ceil() as usize).max(2)
}

// points along a leaf from parameter a to b
fn leaf_path(map: &MapSpec, leaf: &LeafParam, a: f64, b: f64, eps: f64) -> Result<Vec<Vec3>> {
    let n = nodes((b - a).abs(), eps);
    (0..=n)
        .into_par_iter()
        .map(|k| leaf.point(map, a + (b - a) * k as f64 / n as f64))
        .collect()
}

/// Traverse stable, unstable from `x` and unstable, stable back, then close
/// along the center at `w₁`.
///
/// `w₂` is the point of the stable leaf through `z` lying in the
/// center-unstable plane at `w₁`, found by a secant solve on its parameter.
pub fn su_gap(map: &MapSpec, x: &Vec3, eps: f64, alpha: Option<&OneForm>) -> Result<SuGap> {
    if !(eps > 0.0 && eps <= MAX_GAP_EPS) {
        return Err(Error::Precondition(format!(
            "su gap needs 0 < ε ≤ {MAX_GAP_EPS}, got {eps}"
        )));
    }
    let s = GAP_PARAM * eps;
    let xs = LeafParam::new(map, x, Flavor::Stable)?;
    let xu = LeafParam::new(map, x, Flavor::Unstable)?;
    let y = xs.point(map, s)?;
    let z = xu.point(map, s)?;
    let yu = LeafParam::new(map, &y, Flavor::Unstable)?;
    let zs = LeafParam::new(map, &z, Flavor::Stable)?;
    let w1 = yu.point(map, s)?;
    let normal = compute_splitting(map, &w1, DEFAULT_DEPTH)?.n_cu;
    let g = |t: f64| -> Result<f64> { Ok((zs.point(map, t)? - w1).dot(&normal)) };

    let (mut t0, mut t1) = (s, s * (1.0 + 1e-3));
    let (mut g0, mut g1) = (g(t0)?, g(t1)?);
    let mut closed = false;
    for _ in 0..40 {
        if g1.abs() <= 1e-15 || (t1 - t0).abs() <= CLOSE_TOL {
            closed = true;
            break;
        }
        if g1 == g0 {
            break;
        }
        let t2 = t1 - g1 * (t1 - t0) / (g1 - g0);
        (t0, g0) = (t1, g1);
        t1 = t2;
        g1 = g(t1)?;
    }
    if !closed {
        return Err(Error::Newton(format!("su gap at ε = {eps} did not close")));
    }
    let w2 = zs.point(map, t1)?;

    let loop_integral = match alpha {
        None => None,
        Some(a) => {
            let mut total = integrate(a, &leaf_path(map, &xs, 0.0, s, eps)?)?;
            total += integrate(a, &leaf_path(map, &yu, 0.0, s, eps)?)?;
            let n = nodes((w2 - w1).norm(), eps);
            let seg: Vec<Vec3> = (0..=n)
                .map(|k| w1 + (w2 - w1) * (k as f64 / n as f64))
                .collect();
            total += integrate(a, &seg)?;
            total += integrate(a, &leaf_path(map, &zs, t1, 0.0, eps)?)?;
            total += integrate(a, &leaf_path(map, &xu, s, 0.0, eps)?)?;
            Some(total)
        }
    };
    Ok(SuGap {
        eps,
        x: (*x).into(),
        y: y.into(),
        z: z.into(),
        w1: w1.into(),
        w2: w2.into(),
        t: t1,
        gap: map.manifold.distance(&w1, &w2),
        loop_integral,
    })
}

pub fn su_gap_sweep(
    map: &MapSpec,
    x: &Vec3,
    eps: &[f64],
    alpha: Option<&OneForm>,
) -> Result<Vec<SuGap>> {
    eps.par_iter().map(|&e| su_gap(map, x, e, alpha)).collect()
}

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use super::MapSpec;
use crate::{Error, Mat3, Result, Vec3};

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX: usize = 50;
const INITIAL_STEP: f64 = 1e-2;
const MAX_HALVINGS: usize = 3;

#[derive(Clone, Debug, Serialize)]
pub struct ContinuationPoint {
    pub eps: f64,
    /// Periodic point on the cover (fiber coordinate 0 for fibered maps).
    pub point: [f64; 3],
    /// Implicit-function tangent dp/dε.
    pub tangent: [f64; 3],
    pub residual: f64,
}

/// `g^n(p)`, its derivative in `p` and in the parameter, on the cover.
/// Fibered maps are restricted to the base plane.
fn flow(map: &MapSpec, param: &str, p: &Vec3, n: usize) -> Result<(Vec3, Mat3, Vec3)> {
    let mut v = *p;
    let mut jac = Mat3::identity();
    let mut de = Vec3::zeros();
    for _ in 0..n {
        let (val, j, dp) = map.param_derivative(&v, param)?;
        de = j * de + dp;
        jac = j * jac;
        v = val;
        if map.fibered {
            v.z = 0.0;
        }
    }
    Ok((v, jac, de))
}

/// Solve `(Dgⁿ − I) x = r` on the base plane (fibered) or in full.
fn solve(map: &MapSpec, jac: &Mat3, r: &Vec3) -> Result<Vec3> {
    if map.fibered {
        let a = Matrix2::new(
            jac[(0, 0)] - 1.0,
            jac[(0, 1)],
            jac[(1, 0)],
            jac[(1, 1)] - 1.0,
        );
        let x = a
            .lu()
            .solve(&Vector2::new(r.x, r.y))
            .ok_or_else(|| Error::Degenerate("Dgⁿ − I singular on the base".into()))?;
        Ok(Vec3::new(x.x, x.y, 0.0))
    } else {
        (jac - Mat3::identity())
            .lu()
            .solve(r)
            .ok_or_else(|| Error::Degenerate("Dfⁿ − I singular".into()))
    }
}

fn residual_vec(map: &MapSpec, g: &Vec3, p: &Vec3, t: &Vec3) -> Vec3 {
    let mut r = g - p - t;
    if map.fibered {
        r.z = 0.0;
    }
    r
}

/// Newton corrector for `gⁿ(p) − p − t = 0` with fixed integer translation `t`.
fn correct(map: &MapSpec, param: &str, guess: &Vec3, n: usize, t: &Vec3) -> Result<(Vec3, f64)> {
    let mut p = *guess;
    for _ in 0..NEWTON_MAX {
        let (g, jac, _) = flow(map, param, &p, n)?;
        let r = residual_vec(map, &g, &p, t);
        if r.norm() <= NEWTON_TOL {
            return Ok((p, r.norm()));
        }
        p -= solve(map, &jac, &r)?;
        if !p.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("continuation corrector".into()));
        }
    }
    let (g, _, _) = flow(map, param, &p, n)?;
    let r = residual_vec(map, &g, &p, t).norm();
    // rounding floor of the n-fold composition
    if r <= NEWTON_TOL.max(8.0 * f64::EPSILON * (1.0 + g.norm())) {
        Ok((p, r))
    } else {
        Err(Error::Newton(format!("corrector residual {r:e}")))
    }
}

fn tangent(map: &MapSpec, param: &str, p: &Vec3, n: usize) -> Result<Vec3> {
    let (_, jac, de) = flow(map, param, p, n)?;
    Ok(-solve(map, &jac, &de)?)
}

fn translation(map: &MapSpec, param: &str, p: &Vec3, n: usize) -> Result<Vec3> {
    let (g, _, _) = flow(map, param, p, n)?;
    let mut t = (g - p).map(|c| c.round());
    if map.fibered {
        t.z = 0.0;
    }
    Ok(t)
}

/// Follow a periodic point of period `n` from the map's current parameter
/// value through the increasing or decreasing values in `path`.
pub fn continue_periodic_orbit(
    map: &MapSpec,
    param: &str,
    p0: &Vec3,
    n: usize,
    path: &[f64],
) -> Result<Vec<ContinuationPoint>> {
    let mut eps = map
        .param(param)
        .ok_or_else(|| Error::UnboundParameter(param.to_string()))?;
    let t = translation(map, param, p0, n)?;
    let (mut p, _) = correct(map, param, p0, n, &t)?;
    let mut out = Vec::with_capacity(path.len());
    for &target in path {
        while eps != target {
            let at = map.with_param(param, eps)?;
            let tan = tangent(&at, param, &p, n)?;
            let mut step = (target - eps).clamp(-INITIAL_STEP, INITIAL_STEP);
            let mut done = None;
            for _ in 0..=MAX_HALVINGS {
                let next = if (target - eps).abs() <= step.abs() {
                    target
                } else {
                    eps + step
                };
                let trial = map.with_param(param, next)?;
                if let Ok((q, _)) = correct(&trial, param, &(p + tan * (next - eps)), n, &t) {
                    done = Some((next, q));
                    break;
                }
                step *= 0.5;
            }
            let (next, q) = done.ok_or_else(|| {
                Error::NoConvergence(format!("continuation step failed at {param} = {eps}"))
            })?;
            eps = next;
            p = q;
        }
        let at = map.with_param(param, eps)?;
        let (g, _, _) = flow(&at, param, &p, n)?;
        let tan = tangent(&at, param, &p, n)?;
        out.push(ContinuationPoint {
            eps,
            point: [p.x, p.y, p.z],
            tangent: [tan.x, tan.y, tan.z],
            residual: residual_vec(&at, &g, &p, &t).norm(),
        });
    }
    Ok(out)
}

/// Implicit-function and central-difference derivatives of the continued
/// point at the map's current parameter value.
pub fn periodic_point_derivative(
    map: &MapSpec,
    param: &str,
    p0: &Vec3,
    n: usize,
    h: f64,
) -> Result<(Vec3, Vec3)> {
    let eps = map
        .param(param)
        .ok_or_else(|| Error::UnboundParameter(param.to_string()))?;
    let t = translation(map, param, p0, n)?;
    let (p, _) = correct(map, param, p0, n, &t)?;
    let ift = tangent(map, param, &p, n)?;
    let plus = correct(
        &map.with_param(param, eps + h)?,
        param,
        &(p + ift * h),
        n,
        &t,
    )?
    .0;
    let minus = correct(
        &map.with_param(param, eps - h)?,
        param,
        &(p - ift * h),
        n,
        &t,
    )?
    .0;
    Ok((ift, (plus - minus) / (2.0 * h)))
}

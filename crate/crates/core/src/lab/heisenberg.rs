use std::f64::consts::PI;

use serde::Serialize;

use crate::maps::{continue_periodic_orbit, heisenberg_f, periodic_point_derivative, MapSpec};
use crate::{Error, Result, Vec3};

/// Base point of the period-2 orbit of `A` followed in ε.
pub const P0: [f64; 2] = [0.2, 0.4];

/// `−(4/5) sin(2π/5) + (cos(2π/5) − 1)/π`.
pub fn rotation_derivative_closed_form() -> f64 {
    let a = 2.0 * PI / 5.0;
    -0.8 * a.sin() + (a.cos() - 1.0) / PI
}

/// `p₀′ = (−sin(2π/5)/5, −2 sin(2π/5)/5)`.
pub fn p0_derivative_closed_form() -> Vec3 {
    let s = (2.0 * PI / 5.0).sin();
    Vec3::new(-s / 5.0, -2.0 * s / 5.0, 0.0)
}

/// Fiber increment of `F_ε` over the base point `(x, y)`.
pub fn tau(map: &MapSpec, x: f64, y: f64) -> Result<f64> {
    Ok(map.lift(&Vec3::new(x, y, 0.0))?.z)
}

#[derive(Clone, Debug, Serialize)]
pub struct Rotation {
    pub eps: f64,
    pub p: [f64; 2],
    /// `g_ε(p_ε)`, not reduced.
    pub q: [f64; 2],
    pub tau_p: f64,
    pub tau_q: f64,
    /// `τ_ε(p_ε) + τ_ε(q_ε)` before reduction.
    pub lift: f64,
    /// The lift mod 1, in `[0, 1)`.
    pub value: f64,
    pub continuation_residual: f64,
}

/// `p_ε` continued from `P0` at ε = 0.
pub fn periodic_base_point(eps: f64) -> Result<(Vec3, f64)> {
    if eps == 0.0 {
        return Ok((Vec3::new(P0[0], P0[1], 0.0), 0.0));
    }
    let path = continue_periodic_orbit(
        &heisenberg_f(0.0),
        "eps",
        &Vec3::new(P0[0], P0[1], 0.0),
        2,
        &[eps],
    )?;
    let c = path
        .last()
        .ok_or_else(|| Error::NoConvergence("empty continuation path".into()))?;
    Ok((Vec3::from(c.point), c.residual))
}

pub fn rotation_number(eps: f64) -> Result<Rotation> {
    let f = heisenberg_f(eps);
    let (p, residual) = periodic_base_point(eps)?;
    let q = f.lift(&p)?;
    let tau_p = tau(&f, p.x, p.y)?;
    let tau_q = tau(&f, q.x, q.y)?;
    let lift = tau_p + tau_q;
    Ok(Rotation {
        eps,
        p: [p.x, p.y],
        q: [q.x, q.y],
        tau_p,
        tau_q,
        lift,
        value: lift.rem_euclid(1.0),
        continuation_residual: residual,
    })
}

/// Central difference of the lifted rotation number at ε = 0.
pub fn rotation_derivative_at_zero(h: f64) -> Result<f64> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::Precondition(format!(
            "step {h} outside [1e-6, 1e-3]"
        )));
    }
    Ok((rotation_number(h)?.lift - rotation_number(-h)?.lift) / (2.0 * h))
}

/// Spread of `z ↦ F_ε²(p_ε, z).z − z` over `n` fiber points: zero for a rigid rotation.
/// Returns the spread and the mean increment.
pub fn fiber_return_spread(eps: f64, n: usize) -> Result<(f64, f64)> {
    let f = heisenberg_f(eps);
    let (p, _) = periodic_base_point(eps)?;
    let shifts: Vec<f64> = (0..n)
        .map(|k| {
            let z = k as f64 / n as f64;
            let w = f.lift(&f.lift(&Vec3::new(p.x, p.y, z))?)?;
            Ok(w.z - z)
        })
        .collect::<Result<_>>()?;
    let mean = shifts.iter().sum::<f64>() / n as f64;
    let spread = shifts
        .iter()
        .map(|s| (s - shifts[0]).abs())
        .fold(0.0, f64::max);
    Ok((spread, mean))
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuationDefect {
    pub eps: Vec<f64>,
    /// `|p_ε − (p₀ + ε p₀′)|` with the closed-form `p₀′`.
    pub defect: Vec<f64>,
    pub slope: Option<f64>,
    /// Implicit-function `p₀′` against the closed form.
    pub tangent_error: f64,
}

pub fn continuation_defect(eps: &[f64]) -> Result<ContinuationDefect> {
    let f = heisenberg_f(0.0);
    let p0 = Vec3::new(P0[0], P0[1], 0.0);
    let dp = p0_derivative_closed_form();
    let path = continue_periodic_orbit(&f, "eps", &p0, 2, eps)?;
    let defect: Vec<f64> = path
        .iter()
        .map(|c| (Vec3::from(c.point) - p0 - dp * c.eps).norm())
        .collect();
    let (ift, _) = periodic_point_derivative(&f, "eps", &p0, 2, 1e-5)?;
    Ok(ContinuationDefect {
        eps: eps.to_vec(),
        slope: crate::normalform::loglog_slope(eps, &defect),
        defect,
        tangent_error: (ift - dp).norm(),
    })
}

/// `|A² p₀ − p₀|` on the torus, computed exactly in f64.
pub fn p0_periodicity_defect() -> f64 {
    let [x, y] = P0;
    let (x1, y1) = (2.0 * x + y, x + y);
    let (x2, y2) = (2.0 * x1 + y1, x1 + y1);
    let wrap = |d: f64| d - d.round();
    wrap(x2 - x).hypot(wrap(y2 - y))
}

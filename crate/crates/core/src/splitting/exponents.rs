use serde::Serialize;

use super::{compute_splitting, Splitting3, DEFAULT_DEPTH};
use crate::maps::{MapSpec, Orbit};
use crate::{Error, Result, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Multipliers {
    pub s: f64,
    pub c: f64,
    pub u: f64,
}

/// Size of a center vector: `|α(v)|` when the map declares a contact form,
/// Euclidean norm otherwise.
pub fn center_size(map: &MapSpec, at: &Vec3, v: &Vec3) -> Result<f64> {
    match &map.contact_form {
        Some(a) => Ok(a.at(at)?.dot(v).abs()),
        None => Ok(v.norm()),
    }
}

/// `λ*_x(n)` for all three bundles; negative `n` runs backward.
pub fn finite_time_exponents(map: &MapSpec, p: &Vec3, n: i64) -> Result<Multipliers> {
    let sp = compute_splitting(map, p, DEFAULT_DEPTH)?;
    finite_time_with(map, &sp, n)
}

pub fn finite_time_with(map: &MapSpec, sp: &Splitting3, n: i64) -> Result<Multipliers> {
    if n == 0 {
        return Ok(Multipliers {
            s: 1.0,
            c: 1.0,
            u: 1.0,
        });
    }
    let k = n.unsigned_abs() as usize;
    let orbit = if n > 0 {
        Orbit::new(map, &sp.point, 0, k)?
    } else {
        Orbit::new(map, &sp.point, k, 0)?
    };
    let (mut vs, mut vc, mut vu) = (sp.e_s, sp.e_c, sp.e_u);
    if n > 0 {
        for i in 0..k {
            let j = orbit.jac(i as isize);
            vs = j * vs;
            vc = j * vc;
            vu = j * vu;
        }
    } else {
        for i in 1..=k {
            let j = orbit
                .jac(-(i as isize))
                .try_inverse()
                .ok_or_else(|| Error::Degenerate("singular jacobian".into()))?;
            vs = j * vs;
            vc = j * vc;
            vu = j * vu;
        }
    }
    let end = orbit.at(n as isize);
    let c = center_size(map, &end, &vc)? / center_size(map, &sp.point, &sp.e_c)?;
    Ok(Multipliers {
        s: vs.norm(),
        c,
        u: vu.norm(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentReport {
    pub point: Vec3,
    pub steps: usize,
    pub chi_s: f64,
    pub chi_c: f64,
    pub chi_u: f64,
    pub stderr_s: f64,
    pub stderr_c: f64,
    pub stderr_u: f64,
    pub mean_log_det: f64,
    pub window: usize,
    /// Sup and inf of windowed finite-time exponents, ordered (s, c, u).
    pub window_sup: [f64; 3],
    pub window_inf: [f64; 3],
}

impl ExponentReport {
    pub fn sum(&self) -> f64 {
        self.chi_s + self.chi_c + self.chi_u
    }
}

/// Asymptotic exponents from per-step stretches of the flag
/// `E^c ⊂ E^cu ⊂ R³`, re-anchored to the splitting at every step.
///
/// Center stretch is `|J c|`, unstable is the cu-area stretch divided by the
/// center stretch, and stable is the remaining factor of `|det J|`.
pub fn lyapunov_exponents(
    map: &MapSpec,
    p: &Vec3,
    steps: usize,
    renorm_every: usize,
) -> Result<ExponentReport> {
    if steps < 2 {
        return Err(Error::Precondition("need at least two steps".into()));
    }
    let renorm = renorm_every.max(1);
    let orbit = Orbit::new(map, p, 0, steps)?;
    let start = compute_splitting(map, p, DEFAULT_DEPTH);
    let end = compute_splitting(map, &orbit.at(steps as isize), DEFAULT_DEPTH);
    let (start, end) = match (start, end) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::NotPartiallyHyperbolic(_) | Error::NoConvergence(_)), _)
        | (_, Err(Error::NotPartiallyHyperbolic(_) | Error::NoConvergence(_))) => {
            return Ok(summarize(
                p,
                qr_logs(&orbit, steps)?,
                mean_log_det(&orbit, steps),
            ));
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };

    // cu normals forward, cs normals backward
    let mut n_cu = Vec::with_capacity(steps + 1);
    let mut v = start.n_cu;
    n_cu.push(v.normalize());
    let mut inv_t = Vec::with_capacity(steps);
    for k in 0..steps {
        let it = orbit
            .jac(k as isize)
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular jacobian".into()))?
            .transpose();
        inv_t.push(it);
        v = it * v;
        if (k + 1) % renorm == 0 || v.norm() > 1e100 {
            v = v.normalize();
        }
        n_cu.push(v.normalize());
    }
    let mut n_cs = vec![Vec3::zeros(); steps + 1];
    let mut w = end.n_cs;
    n_cs[steps] = w.normalize();
    for k in (0..steps).rev() {
        w = orbit.jac(k as isize).transpose() * w;
        if k % renorm == 0 || w.norm() > 1e100 {
            w = w.normalize();
        }
        n_cs[k] = w.normalize();
    }

    let mut logs = [
        Vec::with_capacity(steps),
        Vec::with_capacity(steps),
        Vec::with_capacity(steps),
    ];
    for k in 0..steps {
        let j = orbit.jac(k as isize);
        let det = j.determinant().abs();
        let c = n_cu[k].cross(&n_cs[k]).normalize();
        let lc = (j * c).norm().ln();
        let area = det * (inv_t[k] * n_cu[k]).norm();
        let ls = -(inv_t[k] * n_cu[k]).norm().ln();
        let lu = area.ln() - lc;
        logs[0].push(ls);
        logs[1].push(lc);
        logs[2].push(lu);
    }
    Ok(summarize(p, logs, mean_log_det(&orbit, steps)))
}

fn mean_log_det(orbit: &Orbit, steps: usize) -> f64 {
    (0..steps)
        .map(|k| orbit.jac(k as isize).determinant().abs().ln())
        .sum::<f64>()
        / steps as f64
}

/// Plain Gram–Schmidt (Benettin) stretches, ordered smallest to largest, for
/// maps without a dominated splitting.
fn qr_logs(orbit: &Orbit, steps: usize) -> Result<[Vec<f64>; 3]> {
    let mut q = crate::Mat3::identity();
    let mut logs = [
        Vec::with_capacity(steps),
        Vec::with_capacity(steps),
        Vec::with_capacity(steps),
    ];
    for k in 0..steps {
        let qr = (orbit.jac(k as isize) * q).qr();
        let r = qr.r();
        q = qr.q();
        for (i, slot) in [2usize, 1, 0].into_iter().enumerate() {
            let d = r[(i, i)].abs();
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::NonFinite("QR stretch".into()));
            }
            logs[slot].push(d.ln());
        }
    }
    Ok(logs)
}

fn summarize(p: &Vec3, logs: [Vec<f64>; 3], mean_log_det: f64) -> ExponentReport {
    let steps = logs[0].len();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let chi: Vec<f64> = logs.iter().map(|l| mean(l)).collect();
    let se: Vec<f64> = logs.iter().map(|l| batch_stderr(l, 20)).collect();
    let window = (steps / 10).clamp(1, 100);
    let mut sup = [f64::NEG_INFINITY; 3];
    let mut inf = [f64::INFINITY; 3];
    for (b, l) in logs.iter().enumerate() {
        let mut acc: f64 = l[..window].iter().sum();
        for i in window..=l.len() {
            if i > window {
                acc += l[i - 1] - l[i - 1 - window];
            }
            let m = acc / window as f64;
            sup[b] = sup[b].max(m);
            inf[b] = inf[b].min(m);
        }
    }
    ExponentReport {
        point: *p,
        steps,
        chi_s: chi[0],
        chi_c: chi[1],
        chi_u: chi[2],
        stderr_s: se[0],
        stderr_c: se[1],
        stderr_u: se[2],
        mean_log_det,
        window,
        window_sup: sup,
        window_inf: inf,
    }
}

fn batch_stderr(v: &[f64], batches: usize) -> f64 {
    let b = batches.min(v.len()).max(2);
    let size = v.len() / b;
    if size == 0 {
        return f64::NAN;
    }
    let means: Vec<f64> = (0..b)
        .map(|i| v[i * size..(i + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let m = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

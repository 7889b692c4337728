use rayon::prelude::*;
use serde::Serialize;

use super::{compute_splitting, finite_time_with, line_angle, Multipliers, DEFAULT_DEPTH};
use crate::maps::MapSpec;
use crate::rng;
use crate::{Error, Result, Vec3};

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub k: usize,
    /// `min log(λ_u / max(λ_c, 1))` over the sample.
    pub margin_u: f64,
    /// `min log(min(λ_c, 1) / λ_s)` over the sample.
    pub margin_s: f64,
    pub r: f64,
    pub r_bunched: bool,
    pub strongly_r_bunched: bool,
    pub sample_size: usize,
}

/// `λ_s < λ_c^r < λ_u` and `λ_s < λ_c^{1−r} < λ_u`.
pub fn r_bunched(m: &Multipliers, r: f64) -> bool {
    let a = m.c.powf(r);
    let b = m.c.powf(1.0 - r);
    m.s < a && a < m.u && m.s < b && b < m.u
}

/// r-bunched and `λ_s < λ_c^{−r} < λ_u`.
pub fn strongly_r_bunched(m: &Multipliers, r: f64) -> bool {
    let a = m.c.powf(-r);
    r_bunched(m, r) && m.s < a && a < m.u
}

/// Smallest `k ≤ k_max` at which the partial hyperbolicity inequalities hold
/// at every sample point; bunching is evaluated at that `k`.
pub fn certify_partial_hyperbolicity(
    map: &MapSpec,
    sample: &[Vec3],
    k_max: usize,
    r: f64,
) -> Result<Certificate> {
    if sample.is_empty() {
        return Err(Error::Precondition("empty sample".into()));
    }
    let splittings: Vec<_> = sample
        .par_iter()
        .map(|p| {
            compute_splitting(map, p, DEFAULT_DEPTH).map_err(|e| {
                Error::NotPartiallyHyperbolic(format!(
                    "at ({:.6}, {:.6}, {:.6}): {e}",
                    p.x, p.y, p.z
                ))
            })
        })
        .collect::<Result<_>>()?;
    let mut last_violation = String::new();
    for k in 1..=k_max {
        let mults: Vec<Multipliers> = splittings
            .par_iter()
            .map(|sp| finite_time_with(map, sp, k as i64))
            .collect::<Result<_>>()?;
        let mut margin_u = f64::INFINITY;
        let mut margin_s = f64::INFINITY;
        let mut ok = true;
        for (m, p) in mults.iter().zip(sample) {
            let mu = (m.u / m.c.max(1.0)).ln();
            let ms = (m.c.min(1.0) / m.s).ln();
            if !(mu > 0.0 && ms > 0.0) {
                ok = false;
                last_violation = format!("k = {k} at ({:.6}, {:.6}, {:.6})", p.x, p.y, p.z);
                break;
            }
            margin_u = margin_u.min(mu);
            margin_s = margin_s.min(ms);
        }
        if ok {
            return Ok(Certificate {
                k,
                margin_u,
                margin_s,
                r,
                r_bunched: mults.iter().all(|m| r_bunched(m, r)),
                strongly_r_bunched: mults.iter().all(|m| strongly_r_bunched(m, r)),
                sample_size: sample.len(),
            });
        }
    }
    Err(Error::NotPartiallyHyperbolic(format!(
        "inequalities fail up to k = {k_max}; last violation {last_violation}"
    )))
}

#[derive(Clone, Debug, Serialize)]
pub struct PlaneRegularity {
    /// Slope clamped to `[0, 1]` and to its 95% interval.
    pub holder_exponent: f64,
    pub raw_slope: f64,
    pub slope_ci: [f64; 2],
    /// `max angle / distance` over the sample.
    pub lipschitz_constant: f64,
    pub fit_r2: f64,
    pub pairs_used: usize,
}

/// Pairs `(p, p + δ v)` with `δ` log-uniform in `[δ_min, δ_max]`.
pub fn sample_pairs(seed: u64, n: usize, delta_min: f64, delta_max: f64) -> Vec<(Vec3, Vec3)> {
    (0..n as u64)
        .map(|i| {
            let mut r = rng::stream(seed, i);
            let p = Vec3::new(
                rand::Rng::gen(&mut r),
                rand::Rng::gen(&mut r),
                rand::Rng::gen(&mut r),
            );
            let t: f64 = rand::Rng::gen(&mut r);
            let d = (delta_min.ln() + t * (delta_max.ln() - delta_min.ln())).exp();
            let v = rng::unit_vector(&mut r);
            (p, p + v * d)
        })
        .collect()
}

/// Log-log fit of the angle between `E^s⊕E^u` planes against distance.
pub fn estimate_plane_regularity(map: &MapSpec, pairs: &[(Vec3, Vec3)]) -> Result<PlaneRegularity> {
    let dists: Vec<f64> = pairs.iter().map(|(p, q)| (p - q).norm()).collect();
    let (dmin, dmax) = dists
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), d| (a.min(*d), b.max(*d)));
    if pairs.len() < 3 || dmax <= dmin * (1.0 + 1e-12) {
        return Err(Error::Degenerate(
            "regularity fit needs distinct pair distances".into(),
        ));
    }
    let angles: Vec<f64> = pairs
        .par_iter()
        .map(|(p, q)| {
            let a = compute_splitting(map, p, DEFAULT_DEPTH)?;
            let b = compute_splitting(map, q, DEFAULT_DEPTH)?;
            Ok(line_angle(&a.n_su(), &b.n_su()))
        })
        .collect::<Result<_>>()?;
    let lipschitz_constant = angles
        .iter()
        .zip(&dists)
        .map(|(a, d)| a / d)
        .fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = angles
        .iter()
        .zip(&dists)
        .filter(|(a, _)| **a > 1e-13)
        .map(|(a, d)| (d.ln(), a.ln()))
        .collect();
    if pts.len() < 3 {
        // plane field constant to rounding: report it as Lipschitz
        return Ok(PlaneRegularity {
            holder_exponent: 1.0,
            raw_slope: f64::NAN,
            slope_ci: [1.0, 1.0],
            lipschitz_constant,
            fit_r2: 1.0,
            pairs_used: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let sse = (syy - slope * sxy).max(0.0);
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let se = (sse / (n - 2.0) / sxx).sqrt();
    let ci = [slope - 1.96 * se, slope + 1.96 * se];
    let holder = slope.clamp(ci[0], ci[1]).clamp(0.0, 1.0);
    Ok(PlaneRegularity {
        holder_exponent: holder,
        raw_slope: slope,
        slope_ci: ci,
        lipschitz_constant,
        fit_r2: r2,
        pairs_used: pts.len(),
    })
}

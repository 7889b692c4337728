use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{exterior_derivative, wedge, OneForm, VolumeForm};
use crate::maps::MapSpec;
use crate::splitting::{compute_splitting, line_angle, DEFAULT_DEPTH};
use crate::{Error, Mat3, Result, Vec3};

/// Contact assertions are skipped where `|α∧dα|` falls below this.
pub const DEGENERATE_H: f64 = 1e-9;
const TRANSVERSE_MIN: f64 = 0.1;

#[derive(Clone, Debug, Serialize)]
pub struct RatioSamples {
    pub points: Vec<[f64; 3]>,
    pub rho: Vec<f64>,
    /// `‖(f*α)_x − ρ(x) α_x‖` per point.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

fn ratio(pulled: &Vec3, a: &Vec3) -> Result<(f64, f64)> {
    let n2 = a.norm_squared();
    if !(n2 > 0.0) {
        return Err(Error::Degenerate("form vanishes at a sample point".into()));
    }
    let rho = pulled.dot(a) / n2;
    Ok((rho, (pulled - rho * a).norm()))
}

/// Least-squares `ρ` with `f*α = ρ α` at each sample.
pub fn pullback_ratio(map: &MapSpec, alpha: &OneForm, samples: &[Vec3]) -> Result<RatioSamples> {
    pullback_ratio_iterate(map, alpha, samples, 1)
}

/// Same for `fⁿ`, pulling back through the lifted orbit.
pub fn pullback_ratio_iterate(
    map: &MapSpec,
    alpha: &OneForm,
    samples: &[Vec3],
    n: usize,
) -> Result<RatioSamples> {
    let out: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|p| {
            let mut q = *p;
            let mut jac = Mat3::identity();
            for _ in 0..n {
                jac = map.jacobian(&q)? * jac;
                q = map.lift(&q)?;
            }
            ratio(&(jac.transpose() * alpha.at(&q)?), &alpha.at(p)?)
        })
        .collect::<Result<_>>()?;
    let (rho, residuals): (Vec<f64>, Vec<f64>) = out.into_iter().unzip();
    Ok(RatioSamples {
        points: samples.iter().map(|p| (*p).into()).collect(),
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        rho,
        residuals,
    })
}

/// `h` with `α∧dα = h m` at each sample.
pub fn contact_density(alpha: &OneForm, m: &VolumeForm, samples: &[Vec3]) -> Result<Vec<f64>> {
    let theta = wedge(alpha, &exterior_derivative(alpha));
    samples
        .par_iter()
        .map(|p| {
            let v = m.at(p)?;
            if v == 0.0 {
                return Err(Error::Degenerate("volume form vanishes".into()));
            }
            Ok(theta.at(p)? / v)
        })
        .collect()
}

/// `max |h(f x) − ρ(x)² h(x)|` over the samples.
pub fn check_hrho(map: &MapSpec, alpha: &OneForm, m: &VolumeForm, samples: &[Vec3]) -> Result<f64> {
    for p in samples {
        let (here, there) = (m.at(p)?, m.at(&map.lift(p)?)?);
        let det = map.jacobian(p)?.determinant();
        if (there * det - here).abs() > 1e-10 * here.abs() {
            return Err(Error::Precondition(format!(
                "{} does not preserve the volume form (defect {:e})",
                map.name,
                there * det - here
            )));
        }
    }
    let rho = pullback_ratio(map, alpha, samples)?.rho;
    let images: Vec<Vec3> = samples.iter().map(|p| map.lift(p)).collect::<Result<_>>()?;
    let h = contact_density(alpha, m, samples)?;
    let hf = contact_density(alpha, m, &images)?;
    Ok(h.iter()
        .zip(&hf)
        .zip(&rho)
        .map(|((h, hf), r)| (hf - r * r * h).abs())
        .fold(0.0, f64::max))
}

// a basis of ker α
fn kernel_basis(a: &Vec3) -> (Vec3, Vec3) {
    let n = a.normalize();
    let k = n.iamin();
    let mut e = Vec3::zeros();
    e[k] = 1.0;
    let u = (e - n * n.dot(&e)).normalize();
    (u, n.cross(&u))
}

/// The Reeb field: `α(R) = 1` and `dα(R, ·) = 0` on `ker α`.
pub fn reeb_field(alpha: &OneForm, p: &Vec3) -> Result<Vec3> {
    let a = alpha.at(p)?;
    let omega = exterior_derivative(alpha).matrix(p)?;
    let h = wedge(alpha, &exterior_derivative(alpha)).at(p)?;
    if h.abs() < DEGENERATE_H {
        return Err(Error::Degenerate(format!("α∧dα = {h:e} at {p:?}")));
    }
    let (u, v) = kernel_basis(&a);
    // dα(R, u) = Rᵀ Ω u
    let sys = Mat3::from_rows(&[
        a.transpose(),
        (omega * u).transpose(),
        (omega * v).transpose(),
    ]);
    sys.lu()
        .solve(&Vec3::new(1.0, 0.0, 0.0))
        .ok_or_else(|| Error::Degenerate("singular Reeb system".into()))
}

/// `max angle(R, E^c)` over the samples.
pub fn check_reeb_center(map: &MapSpec, alpha: &OneForm, samples: &[Vec3]) -> Result<f64> {
    samples
        .par_iter()
        .map(|p| {
            let r = reeb_field(alpha, p)?;
            let ec = compute_splitting(map, p, DEFAULT_DEPTH)?.e_c;
            Ok(line_angle(&r, &ec))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Small flat disk `center + s u + t v`, `s² + t² ≤ radius²`.
#[derive(Clone, Copy, Debug)]
pub struct Disk {
    pub center: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    pub radius: f64,
}

impl Disk {
    /// Center plus `rings` concentric rings of 8 points each.
    pub fn sample(&self, rings: usize) -> Vec<Vec3> {
        let mut out = vec![self.center];
        for r in 1..=rings {
            let rad = self.radius * r as f64 / rings as f64;
            for k in 0..8 {
                let phi = std::f64::consts::TAU * k as f64 / 8.0;
                out.push(self.center + rad * (phi.cos() * self.u + phi.sin() * self.v));
            }
        }
        out
    }
}

/// `min |dα(u, v)|` over the disk for the orthonormalized tangent frame.
pub fn transversal_nondegeneracy(alpha: &OneForm, disk: &Disk, rings: usize) -> Result<f64> {
    let u = disk.u.normalize();
    let v = (disk.v - u * u.dot(&disk.v)).normalize();
    let normal = u.cross(&v);
    let da = exterior_derivative(alpha);
    disk.sample(rings)
        .iter()
        .map(|p| {
            match reeb_field(alpha, p) {
                Ok(r) => {
                    let tilt = std::f64::consts::FRAC_PI_2 - line_angle(&r, &normal);
                    if tilt < TRANSVERSE_MIN {
                        return Err(Error::Precondition(format!(
                            "disk within {tilt:.3} rad of the Reeb field"
                        )));
                    }
                }
                // no Reeb field to be transverse to
                Err(Error::Degenerate(_)) => {}
                Err(e) => return Err(e),
            }
            Ok((u.transpose() * da.matrix(p)? * v)[(0, 0)].abs())
        })
        .try_fold(f64::INFINITY, |m, d: Result<f64>| Ok(m.min(d?)))
}

#[derive(Clone, Debug, Serialize)]
pub struct ContactReport {
    pub map: String,
    pub form: [String; 3],
    pub points: Vec<[f64; 3]>,
    pub rho: Vec<f64>,
    pub rho_residuals: Vec<f64>,
    pub h: Vec<f64>,
    pub hrho_residuals: Vec<f64>,
    pub reeb: Vec<[f64; 3]>,
    pub center_angles: Vec<f64>,
}

impl ContactReport {
    pub fn max_rho_residual(&self) -> f64 {
        self.rho_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_hrho_residual(&self) -> f64 {
        self.hrho_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_center_angle(&self) -> f64 {
        self.center_angles.iter().copied().fold(0.0, f64::max)
    }
}

/// All pointwise diagnostics at once. Samples where `E^c` lies within 1e-3
/// of `ker α` or `|h| < 1e-9` are refused.
pub fn contact_report(
    map: &MapSpec,
    alpha: &OneForm,
    m: &VolumeForm,
    samples: &[Vec3],
) -> Result<ContactReport> {
    let ratios = pullback_ratio(map, alpha, samples)?;
    let h = contact_density(alpha, m, samples)?;
    let images: Vec<Vec3> = samples.iter().map(|p| map.lift(p)).collect::<Result<_>>()?;
    let hf = contact_density(alpha, m, &images)?;
    let per_point: Vec<(Vec3, f64)> = samples
        .par_iter()
        .map(|p| {
            let a = alpha.at(p)?;
            let ec = compute_splitting(map, p, DEFAULT_DEPTH)?.e_c;
            let angle = (a.dot(&ec).abs() / a.norm()).asin();
            if angle < 1e-3 {
                return Err(Error::Precondition(format!(
                    "center within {angle:e} rad of ker α at {p:?}"
                )));
            }
            let r = reeb_field(alpha, p)?;
            Ok((r, line_angle(&r, &ec)))
        })
        .collect::<Result<_>>()?;
    Ok(ContactReport {
        map: map.name.clone(),
        form: alpha.coeffs.clone().map(|c| c.to_string()),
        points: ratios.points,
        hrho_residuals: h
            .iter()
            .zip(&hf)
            .zip(&ratios.rho)
            .map(|((h, hf), r)| (hf - r * r * h).abs())
            .collect(),
        rho: ratios.rho,
        rho_residuals: ratios.residuals,
        h,
        reeb: per_point.iter().map(|(r, _)| (*r).into()).collect(),
        center_angles: per_point.iter().map(|(_, a)| *a).collect(),
    })
}

use serde::Serialize;

use crate::maps::{MapSpec, Orbit};
use crate::{Error, Mat3, Result, Vec3};

pub const DEFAULT_DEPTH: usize = 64;
pub const THETA_MIN: f64 = 1e-3;
const ANGLE_TOL: f64 = 1e-12;
const STREAK: usize = 5;

#[derive(Clone, Debug, Serialize)]
pub struct Splitting3 {
    pub point: Vec3,
    pub e_s: Vec3,
    pub e_c: Vec3,
    pub e_u: Vec3,
    /// Unit normal of the center-unstable plane.
    pub n_cu: Vec3,
    /// Unit normal of the center-stable plane.
    pub n_cs: Vec3,
    pub n_used: usize,
    /// Last angle change of the four power iterations.
    pub residual: f64,
}

impl Splitting3 {
    /// Unit normal of the stable-unstable plane.
    pub fn n_su(&self) -> Vec3 {
        orient(self.e_s.cross(&self.e_u).normalize())
    }
}

/// Angle between the lines spanned by two nonzero vectors.
pub fn line_angle(a: &Vec3, b: &Vec3) -> f64 {
    let (a, b) = (a.normalize(), b.normalize());
    a.cross(&b).norm().atan2(a.dot(&b).abs())
}

/// Sign convention: first coordinate that is clearly nonzero is positive.
pub fn orient(v: Vec3) -> Vec3 {
    for c in v.iter() {
        if c.abs() > 1e-8 {
            return if *c < 0.0 { -v } else { v };
        }
    }
    v
}

struct Power {
    acc: Mat3,
    seed: Vec3,
    last: Option<Vec3>,
    streak: usize,
    change: f64,
}

impl Power {
    fn new(seed: Vec3) -> Self {
        Power {
            acc: Mat3::identity(),
            seed,
            last: None,
            streak: 0,
            change: f64::INFINITY,
        }
    }

    // right-multiply the accumulated product and refresh the estimate
    fn push(&mut self, m: &Mat3) -> Result<()> {
        self.acc *= m;
        let s = self.acc.norm();
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::NonFinite("splitting power iteration".into()));
        }
        self.acc /= s;
        let v = self.acc * self.seed;
        let v = v.normalize();
        if let Some(prev) = self.last {
            self.change = line_angle(&prev, &v);
            if self.change < ANGLE_TOL {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        self.last = Some(v);
        Ok(())
    }

    fn done(&self) -> bool {
        self.streak >= STREAK
    }

    fn dir(&self) -> Vec3 {
        self.last.unwrap_or(self.seed)
    }
}

pub const DEFAULT_SEED: [f64; 3] = [0.31, 0.57, 0.76];

/// Invariant splitting at `p` (in the chart of the given representative).
pub fn compute_splitting(map: &MapSpec, p: &Vec3, n: usize) -> Result<Splitting3> {
    compute_splitting_seeded(map, p, n, Vec3::from(DEFAULT_SEED))
}

pub fn compute_splitting_seeded(
    map: &MapSpec,
    p: &Vec3,
    n: usize,
    seed: Vec3,
) -> Result<Splitting3> {
    let orbit = Orbit::new(map, p, n, n)?;
    splitting_from_orbit(map, &orbit, seed)
}

/// Splitting at `orbit.at(0)` using up to `min(back, fwd)` steps each way.
pub fn splitting_from_orbit(map: &MapSpec, orbit: &Orbit, seed: Vec3) -> Result<Splitting3> {
    let seed = seed.normalize();
    let n = orbit.back().min(orbit.fwd());
    let mut u = Power::new(seed);
    let mut cu = Power::new(seed);
    let mut s = Power::new(seed);
    let mut cs = Power::new(seed);
    let mut used = n;
    for d in 1..=n {
        let jb = orbit.jac(-(d as isize));
        let jf = orbit.jac(d as isize - 1);
        let jb_inv = jb
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular jacobian".into()))?;
        let jf_inv = jf
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular jacobian".into()))?;
        u.push(&jb)?;
        cu.push(&jb_inv.transpose())?;
        s.push(&jf_inv)?;
        cs.push(&jf.transpose())?;
        if u.done() && cu.done() && s.done() && cs.done() {
            used = d;
            break;
        }
    }
    let residual = u.change.max(cu.change).max(s.change).max(cs.change);
    if !(u.done() && cu.done() && s.done() && cs.done()) {
        return Err(Error::NoConvergence(format!(
            "splitting angle change {residual:e} after {n} steps"
        )));
    }
    let e_u = orient(u.dir());
    let e_s = orient(s.dir());
    let n_cu = orient(cu.dir());
    let n_cs = orient(cs.dir());
    let c = n_cu.cross(&n_cs);
    if c.norm() < THETA_MIN {
        return Err(Error::NotPartiallyHyperbolic(
            "center-unstable and center-stable planes coincide".into(),
        ));
    }
    let e_c = orient(c.normalize());
    let sp = Splitting3 {
        point: orbit.at(0),
        e_s,
        e_c,
        e_u,
        n_cu,
        n_cs,
        n_used: used,
        residual,
    };
    check_ph(map, orbit, &sp, used)?;
    Ok(sp)
}

fn check_ph(_map: &MapSpec, orbit: &Orbit, sp: &Splitting3, used: usize) -> Result<()> {
    let min_angle = line_angle(&sp.e_s, &sp.e_c)
        .min(line_angle(&sp.e_s, &sp.e_u))
        .min(line_angle(&sp.e_c, &sp.e_u));
    if min_angle < THETA_MIN {
        return Err(Error::NotPartiallyHyperbolic(format!(
            "splitting angle {min_angle:e} below minimum"
        )));
    }
    // domination over the steps actually used. Iterating e_s and e_c directly
    // picks up roundoff along e_u, so grow the flag e_u ⊂ <e_u, e_c> ⊂ R³ instead.
    let mut q = Mat3::from_columns(&[sp.e_u, sp.e_c, sp.e_s]);
    let mut logs = [0.0; 3];
    for k in 0..used.min(orbit.fwd()) {
        let qr = (orbit.jac(k as isize) * q).qr();
        let r = qr.r();
        for (i, l) in logs.iter_mut().enumerate() {
            *l += r[(i, i)].abs().ln();
        }
        q = qr.q();
    }
    let [lu, lc, ls] = logs;
    let margin = 1e-3 * used as f64;
    if !(ls + margin < lc.min(0.0) && lc.max(0.0) + margin < lu) {
        return Err(Error::NotPartiallyHyperbolic(format!(
            "no domination over {used} steps: log λ = ({ls:.3e}, {lc:.3e}, {lu:.3e})"
        )));
    }
    Ok(())
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::maps::{MapSpec, Orbit};
use crate::splitting::{splitting_from_orbit, DEFAULT_DEPTH, DEFAULT_SEED};
use crate::{Error, Mat3, Result, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    #[serde(rename = "s")]
    Stable,
    #[serde(rename = "u")]
    Unstable,
}

impl Flavor {
    pub fn parse(s: &str) -> Option<Flavor> {
        match s {
            "s" | "stable" => Some(Flavor::Stable),
            "u" | "unstable" => Some(Flavor::Unstable),
            _ => None,
        }
    }
}

pub const LEAF_DEPTH: usize = 48;
const LEAF_TOL: f64 = 1e-10;
/// Displacements below this are moved with the 2-jet of the map.
const JET_RADIUS: f64 = 1e-5;

// One transition from node k+1 to node k of the chain. For the unstable
// flavor this is a forward step src → target; for the stable flavor it is
// the inverse of the forward step src → target.
#[derive(Clone, Debug)]
struct Transition {
    src: Vec3,
    img: Vec3,
    dlin: Mat3,
    jac: Mat3,
    jac_inv: Mat3,
    hess: [Mat3; 3],
}

fn quad(h: &[Mat3; 3], a: &Vec3, b: &Vec3) -> Vec3 {
    Vec3::new(a.dot(&(h[0] * b)), a.dot(&(h[1] * b)), a.dot(&(h[2] * b)))
}

/// Non-stationary linearization `Φ_x` of the stable or unstable leaf through
/// `x`, evaluated by transporting a linear displacement from far along the
/// orbit and refining the depth until successive values agree.
#[derive(Clone, Debug)]
pub struct LeafParam {
    pub base: Vec3,
    pub flavor: Flavor,
    /// `DΦ_x(0)`, a unit vector.
    pub direction: Vec3,
    pub depth: usize,
    // node k sits k steps away from x (backward for u, forward for s)
    dirs: Vec<Vec3>,
    scales: Vec<f64>,
    trans: Vec<Transition>,
}

impl LeafParam {
    pub fn new(map: &MapSpec, x: &Vec3, flavor: Flavor) -> Result<LeafParam> {
        Self::with_depth(map, x, flavor, LEAF_DEPTH)
    }

    pub fn with_depth(map: &MapSpec, x: &Vec3, flavor: Flavor, depth: usize) -> Result<LeafParam> {
        if depth < 8 {
            return Err(Error::Precondition("leaf depth must be at least 8".into()));
        }
        // one orbit long enough for the splitting window around every node
        let orbit = match flavor {
            Flavor::Unstable => Orbit::new(map, x, depth + DEFAULT_DEPTH, DEFAULT_DEPTH)?,
            Flavor::Stable => Orbit::new(map, x, DEFAULT_DEPTH, depth + DEFAULT_DEPTH)?,
        };
        let sign = |k: usize| match flavor {
            Flavor::Unstable => -(k as isize),
            Flavor::Stable => k as isize,
        };
        let nodes: Vec<Vec3> = (0..=depth).map(|k| orbit.at(sign(k))).collect();
        let raw: Vec<Vec3> = (0..=depth)
            .into_par_iter()
            .map(|k| {
                let window = orbit.window(sign(k), DEFAULT_DEPTH, DEFAULT_DEPTH)?;
                let sp = splitting_from_orbit(map, &window, Vec3::from(DEFAULT_SEED))?;
                Ok(match flavor {
                    Flavor::Unstable => sp.e_u,
                    Flavor::Stable => sp.e_s,
                })
            })
            .collect::<Result<_>>()?;

        let trans: Vec<Transition> = (0..depth)
            .into_par_iter()
            .map(|k| {
                // forward step index along the orbit
                let (step, src) = match flavor {
                    Flavor::Unstable => (-(k as isize) - 1, nodes[k + 1]),
                    Flavor::Stable => (k as isize, nodes[k]),
                };
                let dlin = map.manifold.deck_linear(orbit.deck(step));
                let jet = map.jet2_at(&src)?;
                let mut hess = [Mat3::zeros(); 3];
                for (i, h) in hess.iter_mut().enumerate() {
                    for j in 0..3 {
                        *h += jet.hessians[j] * dlin[(i, j)];
                    }
                }
                let jac = dlin * jet.jacobian;
                let jac_inv = jac.try_inverse().ok_or_else(|| {
                    Error::Degenerate("singular jacobian along leaf orbit".into())
                })?;
                Ok(Transition {
                    src,
                    img: jet.value,
                    dlin,
                    jac,
                    jac_inv,
                    hess,
                })
            })
            .collect::<Result<_>>()?;

        // consistent signs and cumulative multipliers λ_x(∓k)
        let mut dirs = Vec::with_capacity(depth + 1);
        let mut scales = Vec::with_capacity(depth + 1);
        dirs.push(raw[0]);
        scales.push(1.0);
        for k in 1..=depth {
            let t = &trans[k - 1];
            let mut d = raw[k];
            match flavor {
                Flavor::Unstable => {
                    // forward jac maps node k to node k-1
                    let img = t.jac * d;
                    if img.dot(&dirs[k - 1]) < 0.0 {
                        d = -d;
                    }
                    dirs.push(d);
                    scales.push(scales[k - 1] / img.norm());
                }
                Flavor::Stable => {
                    // forward jac maps node k-1 to node k
                    let img = t.jac * dirs[k - 1];
                    if img.dot(&d) < 0.0 {
                        d = -d;
                    }
                    dirs.push(d);
                    scales.push(scales[k - 1] * img.norm());
                }
            }
        }
        Ok(LeafParam {
            base: *x,
            flavor,
            direction: raw[0],
            depth,
            dirs,
            scales,
            trans,
        })
    }

    /// Multiplier `λ_x(∓k)` from `x` to node `k` of the chain.
    pub fn scale(&self, k: usize) -> f64 {
        self.scales[k]
    }

    // move a displacement from node k+1 to node k
    fn carry(&self, map: &MapSpec, k: usize, d: &Vec3) -> Result<Vec3> {
        let t = &self.trans[k];
        match self.flavor {
            Flavor::Unstable => {
                if d.norm() < JET_RADIUS {
                    Ok(t.jac * d + 0.5 * quad(&t.hess, d, d))
                } else {
                    Ok(t.dlin * (map.lift(&(t.src + d))? - t.img))
                }
            }
            Flavor::Stable => {
                let w = t.jac_inv * d;
                let mut delta = w - 0.5 * (t.jac_inv * quad(&t.hess, &w, &w));
                if d.norm() < JET_RADIUS {
                    return Ok(delta);
                }
                for _ in 0..30 {
                    let r = t.dlin * (map.lift(&(t.src + delta))? - t.img) - d;
                    let j = t.dlin * map.jacobian(&(t.src + delta))?;
                    let step = j
                        .lu()
                        .solve(&r)
                        .ok_or_else(|| Error::Newton("singular leaf pullback".into()))?;
                    delta -= step;
                    // quadratic convergence: the error after this step is far below its size
                    if step.norm() <= 1e-12 * delta.norm() + 1e-15 {
                        return Ok(delta);
                    }
                }
                Err(Error::Newton("leaf pullback did not settle".into()))
            }
        }
    }

    /// `Φ_x(ξ)` using exactly `n` transitions.
    pub fn eval_at_depth(&self, map: &MapSpec, xi: f64, n: usize) -> Result<Vec3> {
        if n > self.depth {
            return Err(Error::Precondition(format!(
                "depth {n} exceeds built depth {}",
                self.depth
            )));
        }
        let mut d = self.dirs[n] * (xi * self.scales[n]);
        for k in (0..n).rev() {
            d = self.carry(map, k, &d)?;
        }
        Ok(self.base + d)
    }

    /// `Φ_x(ξ)` with the depth refined until successive values differ by at most 1e-10.
    /// Returns the point and the last change.
    pub fn eval(&self, map: &MapSpec, xi: f64) -> Result<(Vec3, f64)> {
        if xi == 0.0 {
            return Ok((self.base, 0.0));
        }
        let mut n = 8;
        let mut prev = self.eval_at_depth(map, xi, n)?;
        while n + 4 <= self.depth {
            n += 4;
            let cur = self.eval_at_depth(map, xi, n)?;
            let change = (cur - prev).norm();
            if !change.is_finite() {
                return Err(Error::NonFinite("leaf evaluation".into()));
            }
            if change <= LEAF_TOL {
                return Ok((cur, change));
            }
            prev = cur;
        }
        Err(Error::NoConvergence(format!(
            "leaf at ξ = {xi} beyond the chart radius"
        )))
    }

    pub fn point(&self, map: &MapSpec, xi: f64) -> Result<Vec3> {
        Ok(self.eval(map, xi)?.0)
    }

    /// `(Φ'(0), Φ''(0))` from the transported 2-jet of the linear seed curve.
    pub fn second_order(&self) -> Result<(Vec3, Vec3)> {
        let run = |n: usize| {
            let mut g1 = self.dirs[n] * self.scales[n];
            let mut g2 = Vec3::zeros();
            for k in (0..n).rev() {
                let t = &self.trans[k];
                match self.flavor {
                    Flavor::Unstable => {
                        g2 = t.jac * g2 + quad(&t.hess, &g1, &g1);
                        g1 = t.jac * g1;
                    }
                    Flavor::Stable => {
                        let p1 = t.jac_inv * g1;
                        g2 = t.jac_inv * (g2 - quad(&t.hess, &p1, &p1));
                        g1 = p1;
                    }
                }
            }
            (g1, g2)
        };
        let mut n = 8;
        let mut prev = run(n);
        while n + 4 <= self.depth {
            n += 4;
            let cur = run(n);
            if (cur.1 - prev.1).norm() <= LEAF_TOL * (1.0 + cur.1.norm()) {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(Error::NoConvergence("leaf curvature did not settle".into()))
    }
}

/// `Φ^s_x(ξ)` or `Φ^u_x(ξ)` as a point of the quotient.
pub fn leaf_point(map: &MapSpec, x: &Point, xi: f64, flavor: Flavor) -> Result<Point> {
    let leaf = LeafParam::new(map, &x.vec(), flavor)?;
    let p = leaf.point(map, xi)?;
    Ok(Point::from_vec(map.manifold, &map.manifold.reduce(&p).0))
}

/// `max_ξ dist(f(Φ_x(ξ)), Φ_{f(x)}(λ_x ξ))` over the given parameters.
pub fn conjugacy_residual(map: &MapSpec, x: &Vec3, flavor: Flavor, xis: &[f64]) -> Result<f64> {
    let orbit = Orbit::new(map, x, 0, 1)?;
    let fx = orbit.at(1);
    let here = LeafParam::new(map, x, flavor)?;
    let there = LeafParam::new(map, &fx, flavor)?;
    let img = orbit.jac(0) * here.direction;
    let lambda = img.norm() * img.dot(&there.direction).signum();
    let deck = orbit.deck(0);
    xis.par_iter()
        .map(|&xi| {
            let p = here.point(map, xi)?;
            let fp = map.manifold.apply_deck(deck, &map.lift(&p)?);
            let q = there.point(map, lambda * xi)?;
            Ok(map.manifold.distance(&fp, &q))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

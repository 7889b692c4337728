use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::Serialize;

use super::MapSpec;
use crate::geometry::{Deck, Manifold, Point};
use crate::{Error, Mat3, Result, Vec3};

const NEWTON_MAX: usize = 50;
const DEDUP: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicOrbit {
    pub points: Vec<Point>,
    pub period: usize,
    /// `decks[i]` carries `f̃(points[i])` next to `points[i+1]` (indices mod period).
    pub decks: Vec<Deck>,
    /// z-translation still needed to close the orbit. Zero for genuine orbits;
    /// nonzero for orbits of fibered maps that close only up to a fiber translation.
    pub fiber_shift: f64,
    pub residual: f64,
}

impl PeriodicOrbit {
    pub fn is_genuine(&self) -> bool {
        self.fiber_shift.abs() <= 1e-9
    }

    pub fn vecs(&self) -> Vec<Vec3> {
        self.points.iter().map(|p| p.vec()).collect()
    }
}

/// Orbit data generated from a point already known to be periodic (possibly
/// only on the base for fibered maps).
pub fn orbit_from_point(map: &MapSpec, p0: &Vec3, period: usize) -> Result<PeriodicOrbit> {
    if period == 0 {
        return Err(Error::Precondition("period must be at least 1".into()));
    }
    let man = map.manifold;
    let mut points = vec![*p0];
    let mut decks = Vec::with_capacity(period);
    let mut residual: f64 = 0.0;
    for i in 0..period {
        let w = map.lift(&points[i])?;
        if i + 1 < period {
            let (q, g) = man.reduce(&w);
            points.push(q);
            decks.push(g);
        } else {
            let h = closing_deck(man, &w, p0);
            decks.push(h);
        }
    }
    let w = map.lift(&points[period - 1])?;
    let closed = man.apply_deck(decks[period - 1], &w);
    let fiber_shift = if map.fibered { p0.z - closed.z } else { 0.0 };
    let shifted = closed + Vec3::new(0.0, 0.0, fiber_shift);
    residual = residual.max((shifted - p0).norm());
    for i in 0..period.saturating_sub(1) {
        let w = map.lift(&points[i])?;
        residual = residual.max((man.apply_deck(decks[i], &w) - points[i + 1]).norm());
    }
    Ok(PeriodicOrbit {
        points: points.iter().map(|v| Point::from_vec(man, v)).collect(),
        period,
        decks,
        fiber_shift,
        residual,
    })
}

/// Deck bringing `w` next to `target`, with integer z-offset closest to exact.
fn closing_deck(man: Manifold, w: &Vec3, target: &Vec3) -> Deck {
    let m = (target.x - w.x).round();
    let n = (target.y - w.y).round();
    let mut g = Deck {
        m: m as i64,
        n: n as i64,
        k: 0.0,
    };
    let raw = target.z - man.apply_deck(g, w).z;
    if man != Manifold::Torus2 {
        g.k = raw.round();
    }
    g
}

fn base_iterate(map: &MapSpec, p: &Vector2<f64>, n: usize) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    let mut v = Vec3::new(p.x, p.y, 0.0);
    let mut jac = Matrix2::identity();
    for _ in 0..n {
        let j = map.jacobian(&v)?;
        let j2 = Matrix2::new(j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]);
        jac = j2 * jac;
        v = map.lift(&v)?;
        v.z = 0.0;
    }
    Ok((Vector2::new(v.x, v.y), jac))
}

fn lift_iterate(map: &MapSpec, p: &Vec3, n: usize) -> Result<(Vec3, Mat3)> {
    let mut v = *p;
    let mut jac = Mat3::identity();
    for _ in 0..n {
        jac = map.jacobian(&v)? * jac;
        v = map.lift(&v)?;
    }
    Ok((v, jac))
}

fn newton_base(map: &MapSpec, seed: Vector2<f64>, n: usize, tol: f64) -> Option<Vector2<f64>> {
    let (g0, _) = base_iterate(map, &seed, n).ok()?;
    let t = (g0 - seed).map(|c| c.round());
    let mut p = seed;
    for _ in 0..NEWTON_MAX {
        let (g, j) = base_iterate(map, &p, n).ok()?;
        let r = g - p - t;
        let scale = 1.0 + g.norm();
        if r.norm() <= tol.max(4.0 * f64::EPSILON * scale) {
            return Some(p);
        }
        let step = (j - Matrix2::identity()).lu().solve(&r)?;
        p -= step;
        if !p.iter().all(|c| c.is_finite()) || (p - seed).norm() > 2.0 {
            return None;
        }
    }
    None
}

fn newton_full(map: &MapSpec, seed: Vec3, n: usize, tol: f64) -> Option<Vec3> {
    let (g0, _) = lift_iterate(map, &seed, n).ok()?;
    let h = map.manifold.deck_between(&g0, &seed);
    let lin = map.manifold.deck_linear(h);
    let mut p = seed;
    for _ in 0..NEWTON_MAX {
        let (g, j) = lift_iterate(map, &p, n).ok()?;
        let r = map.manifold.apply_deck(h, &g) - p;
        if r.norm() <= tol.max(4.0 * f64::EPSILON * (1.0 + g.norm())) {
            return Some(p);
        }
        // center directions make the system singular; use the pseudo-inverse
        let a = lin * j - Mat3::identity();
        let step = a.svd(true, true).solve(&r, 1e-10).ok()?;
        p -= step;
        if !p.iter().all(|c| c.is_finite()) || (p - seed).norm() > 2.0 {
            return None;
        }
    }
    None
}

fn dedup_sorted(mut pts: Vec<Vec3>, man: Manifold) -> Vec<Vec3> {
    pts.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut kept: Vec<Vec3> = Vec::new();
    for p in pts {
        if !kept.iter().any(|q| man.distance(q, &p) < DEDUP) {
            kept.push(p);
        }
    }
    kept
}

/// Periodic orbits whose minimal period divides `period`, each listed once.
///
/// Fibered maps are searched on the base torus (the fiber coordinate is set
/// to 0 at the first point); others by pseudo-inverse Newton in 3D.
pub fn find_periodic_orbits(
    map: &MapSpec,
    period: usize,
    grid: usize,
    tol: f64,
) -> Result<Vec<PeriodicOrbit>> {
    if period == 0 {
        return Err(Error::Precondition("period must be at least 1".into()));
    }
    let man = map.manifold;
    let seeds: Vec<(usize, usize)> = (0..grid)
        .flat_map(|i| (0..grid).map(move |j| (i, j)))
        .collect();
    let h = 1.0 / grid as f64;
    let found: Vec<Vec3> = seeds
        .par_iter()
        .filter_map(|&(i, j)| {
            let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            if map.fibered {
                newton_base(map, Vector2::new(x, y), period, tol).map(|p| Vec3::new(p.x, p.y, 0.0))
            } else {
                newton_full(map, Vec3::new(x, y, 0.0), period, tol)
            }
        })
        .map(|p| {
            let (mut q, _) = man.reduce(&p);
            if map.fibered {
                q.z = 0.0;
            }
            q
        })
        .collect();
    let candidates = dedup_sorted(found, man);

    let mut assigned = vec![false; candidates.len()];
    let mut out = Vec::new();
    for i in 0..candidates.len() {
        if assigned[i] {
            continue;
        }
        let start = candidates[i];
        // minimal period along the reduced orbit (base distance for fibered maps)
        let mut cur = start;
        let mut minimal = period;
        for k in 1..=period {
            cur = map.step(&cur)?.0;
            let d = if map.fibered {
                Manifold::Torus2.distance(
                    &Vec3::new(cur.x, cur.y, 0.0),
                    &Vec3::new(start.x, start.y, 0.0),
                )
            } else {
                man.distance(&cur, &start)
            };
            if d < DEDUP {
                minimal = k;
                break;
            }
        }
        let orbit = orbit_from_point(map, &start, minimal)?;
        for p in &orbit.points {
            for (j, c) in candidates.iter().enumerate() {
                let d = if map.fibered {
                    Manifold::Torus2.distance(
                        &Vec3::new(c.x, c.y, 0.0),
                        &Vec3::new(p.coords[0], p.coords[1], 0.0),
                    )
                } else {
                    man.distance(c, &p.vec())
                };
                if d < DEDUP {
                    assigned[j] = true;
                }
            }
        }
        out.push(orbit);
    }
    Ok(out)
}

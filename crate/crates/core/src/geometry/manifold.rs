use serde::{Deserialize, Serialize};

use crate::{Mat3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Manifold {
    Torus3,
    Heisenberg,
    /// Base of skew products; the third coordinate is carried along unreduced.
    Torus2,
}

/// Deck transformation `g_{m,n,k}`. On the Heisenberg manifold it acts by
/// `(x+m, y+n, z+k+m·y+mn/2)`; on tori by plain translation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Deck {
    pub m: i64,
    pub n: i64,
    /// A float because the Heisenberg relation produces half-integers under composition.
    pub k: f64,
}

impl Deck {
    pub const IDENTITY: Deck = Deck { m: 0, n: 0, k: 0.0 };

    pub fn new(m: i64, n: i64, k: i64) -> Self {
        Deck { m, n, k: k as f64 }
    }

    pub fn is_identity(&self) -> bool {
        self.m == 0 && self.n == 0 && self.k == 0.0
    }
}

impl Manifold {
    pub fn parse(name: &str) -> Option<Manifold> {
        match name {
            "torus3" => Some(Manifold::Torus3),
            "heisenberg" => Some(Manifold::Heisenberg),
            "torus2" => Some(Manifold::Torus2),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Manifold::Torus3 => "torus3",
            Manifold::Heisenberg => "heisenberg",
            Manifold::Torus2 => "torus2",
        }
    }

    pub fn apply_deck(self, g: Deck, p: &Vec3) -> Vec3 {
        let (m, n) = (g.m as f64, g.n as f64);
        match self {
            Manifold::Heisenberg => Vec3::new(p.x + m, p.y + n, p.z + g.k + m * p.y + 0.5 * m * n),
            Manifold::Torus3 => Vec3::new(p.x + m, p.y + n, p.z + g.k),
            Manifold::Torus2 => Vec3::new(p.x + m, p.y + n, p.z),
        }
    }

    pub fn apply_deck_inverse(self, g: Deck, p: &Vec3) -> Vec3 {
        let (m, n) = (g.m as f64, g.n as f64);
        match self {
            Manifold::Heisenberg => {
                Vec3::new(p.x - m, p.y - n, p.z - g.k - m * (p.y - n) - 0.5 * m * n)
            }
            Manifold::Torus3 => Vec3::new(p.x - m, p.y - n, p.z - g.k),
            Manifold::Torus2 => Vec3::new(p.x - m, p.y - n, p.z),
        }
    }

    /// Derivative of the deck transformation (constant in the point).
    pub fn deck_linear(self, g: Deck) -> Mat3 {
        let mut l = Mat3::identity();
        if self == Manifold::Heisenberg {
            l[(2, 1)] = g.m as f64;
        }
        l
    }

    /// Representative in `[0,1)³` together with the deck element that produced it.
    pub fn reduce(self, p: &Vec3) -> (Vec3, Deck) {
        let mut m = -p.x.floor();
        let mut n = -p.y.floor();
        // p.x + m can round up to exactly 1.0 when p.x is a tiny negative
        if p.x + m >= 1.0 {
            m -= 1.0;
        }
        if p.y + n >= 1.0 {
            n -= 1.0;
        }
        let mut g = Deck {
            m: m as i64,
            n: n as i64,
            k: 0.0,
        };
        let mut q = self.apply_deck(g, p);
        if self != Manifold::Torus2 {
            let mut k = -q.z.floor();
            if q.z + k >= 1.0 {
                k -= 1.0;
            }
            g.k = k;
            q.z += k;
        }
        (q, g)
    }

    /// Deck element `g` with `g(from) ≈ to`, assuming the two are deck-equivalent.
    pub fn deck_between(self, from: &Vec3, to: &Vec3) -> Deck {
        let m = (to.x - from.x).round();
        let n = (to.y - from.y).round();
        let k = match self {
            // mn/2 may be half-integral, so the offset is rounded to halves
            Manifold::Heisenberg => {
                ((to.z - (from.z + m * from.y + 0.5 * m * n)) * 2.0).round() / 2.0
            }
            Manifold::Torus3 => (to.z - from.z).round(),
            Manifold::Torus2 => 0.0,
        };
        Deck {
            m: m as i64,
            n: n as i64,
            k,
        }
    }

    /// Smallest Euclidean distance between the reduced `p` and deck images of
    /// the reduced `q` with `|m|,|n| ≤ 2`, `|k| ≤ 3`, symmetrized over the two
    /// directions. Reduction first makes the window sufficient for any inputs.
    /// On the Heisenberg manifold `k` runs over half-integers, since composed
    /// deck transformations reach those.
    pub fn distance(self, p: &Vec3, q: &Vec3) -> f64 {
        let (p, q) = (self.reduce(p).0, self.reduce(q).0);
        self.one_sided(&p, &q).min(self.one_sided(&q, &p))
    }

    fn one_sided(self, p: &Vec3, q: &Vec3) -> f64 {
        let mut best = f64::INFINITY;
        let ks: Vec<f64> = match self {
            Manifold::Torus2 => vec![0.0],
            Manifold::Heisenberg => (-6..=6).map(|k| k as f64 / 2.0).collect(),
            _ => (-3..=3).map(|k| k as f64).collect(),
        };
        for m in -2..=2 {
            for n in -2..=2 {
                for &k in &ks {
                    let d = (self.apply_deck(Deck { m, n, k }, q) - p).norm();
                    best = best.min(d);
                }
            }
        }
        best
    }
}

/// Point on a quotient manifold, stored by a cover representative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: [f64; 3],
    pub manifold: Manifold,
}

impl Point {
    pub fn new(manifold: Manifold, coords: [f64; 3]) -> Self {
        Point { coords, manifold }
    }

    pub fn vec(&self) -> Vec3 {
        Vec3::from(self.coords)
    }

    pub fn from_vec(manifold: Manifold, v: &Vec3) -> Self {
        Point {
            coords: [v.x, v.y, v.z],
            manifold,
        }
    }
}

pub fn reduce_to_fundamental_domain(p: &Point) -> Point {
    let (q, _) = p.manifold.reduce(&p.vec());
    Point::from_vec(p.manifold, &q)
}

pub fn quotient_distance(p: &Point, q: &Point) -> f64 {
    p.manifold.distance(&p.vec(), &q.vec())
}

use super::MapSpec;
use crate::geometry::Deck;
use crate::{Mat3, Result, Vec3};

/// Orbit segment with the deck bookkeeping that keeps consecutive
/// representatives in `[0,1)³` while derivatives stay consistent.
///
/// For each index `i < len-1`: `points[i+1] ≈ decks[i](f̃(points[i]))` and
/// `jacobians[i] = D(decks[i]) · Df̃(points[i])`.
#[derive(Clone, Debug)]
pub struct Orbit {
    pub points: Vec<Vec3>,
    pub decks: Vec<Deck>,
    pub jacobians: Vec<Mat3>,
    /// Index of the starting point.
    pub origin: usize,
}

/// Reduced preimage `q` of `p` and the deck `h` with `p ≈ h(f̃(q))`.
pub fn backward_step(map: &MapSpec, p: &Vec3) -> Result<(Vec3, Deck)> {
    let u = map.lift_inverse(p)?;
    let (q, _) = map.manifold.reduce(&u);
    let h = map.manifold.deck_between(&map.lift(&q)?, p);
    Ok((q, h))
}

impl Orbit {
    /// `back` preimages and `fwd` images of `p`; `p` itself is kept as given.
    pub fn new(map: &MapSpec, p: &Vec3, back: usize, fwd: usize) -> Result<Orbit> {
        let mut pts_back = Vec::with_capacity(back);
        let mut decks_back = Vec::with_capacity(back);
        let mut cur = *p;
        for _ in 0..back {
            let (q, h) = backward_step(map, &cur)?;
            pts_back.push(q);
            decks_back.push(h);
            cur = q;
        }
        pts_back.reverse();
        decks_back.reverse();
        let mut points = pts_back;
        let mut decks = decks_back;
        points.push(*p);
        cur = *p;
        for _ in 0..fwd {
            let (q, g) = map.step(&cur)?;
            points.push(q);
            decks.push(g);
            cur = q;
        }
        let mut jacobians = Vec::with_capacity(decks.len());
        for (i, g) in decks.iter().enumerate() {
            jacobians.push(map.manifold.deck_linear(*g) * map.jacobian(&points[i])?);
        }
        Ok(Orbit {
            points,
            decks,
            jacobians,
            origin: back,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn at(&self, k: isize) -> Vec3 {
        self.points[(self.origin as isize + k) as usize]
    }

    /// Jacobian of the transition from index `k` to `k+1` (relative to origin).
    pub fn jac(&self, k: isize) -> Mat3 {
        self.jacobians[(self.origin as isize + k) as usize]
    }

    pub fn deck(&self, k: isize) -> Deck {
        self.decks[(self.origin as isize + k) as usize]
    }

    /// Sub-orbit centred at index `k` with `back` preimages and `fwd` images.
    pub fn window(&self, k: isize, back: usize, fwd: usize) -> Result<Orbit> {
        let c = self.origin as isize + k;
        if c - (back as isize) < 0 || c + fwd as isize >= self.points.len() as isize {
            return Err(crate::Error::Precondition(format!(
                "orbit window around {k} out of range"
            )));
        }
        let (lo, hi) = ((c as usize) - back, c as usize + fwd);
        Ok(Orbit {
            points: self.points[lo..=hi].to_vec(),
            decks: self.decks[lo..hi].to_vec(),
            jacobians: self.jacobians[lo..hi].to_vec(),
            origin: back,
        })
    }

    pub fn back(&self) -> usize {
        self.origin
    }

    pub fn fwd(&self) -> usize {
        self.points.len() - 1 - self.origin
    }
}

/// Image of a point near `points[k]` in the chart of `points[k+1]`.
pub fn push_near(map: &MapSpec, deck: Deck, q: &Vec3) -> Result<Vec3> {
    Ok(map.manifold.apply_deck(deck, &map.lift(q)?))
}

/// Preimage of a point near `points[k+1]` in the chart of `points[k]`.
pub fn pull_near(map: &MapSpec, deck: Deck, q: &Vec3) -> Result<Vec3> {
    map.lift_inverse(&map.manifold.apply_deck_inverse(deck, q))
}

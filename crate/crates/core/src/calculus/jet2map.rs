use super::Jet2;
use crate::{Error, Mat3, Result, Vec3};

/// Order-2 Taylor expansion of a map R³ → R³ at `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2Map3 {
    pub base: Vec3,
    pub value: Vec3,
    pub jacobian: Mat3,
    pub hessians: [Mat3; 3],
}

fn symmetrize(m: Mat3) -> Mat3 {
    (m + m.transpose()) * 0.5
}

impl Jet2Map3 {
    pub fn identity(base: Vec3) -> Self {
        Jet2Map3 {
            base,
            value: base,
            jacobian: Mat3::identity(),
            hessians: [Mat3::zeros(); 3],
        }
    }

    pub fn affine(base: Vec3, value: Vec3, jacobian: Mat3) -> Self {
        Jet2Map3 {
            base,
            value,
            jacobian,
            hessians: [Mat3::zeros(); 3],
        }
    }

    pub fn from_components(base: Vec3, c: &[Jet2; 3]) -> Self {
        let mut jac = Mat3::zeros();
        let mut hessians = [Mat3::zeros(); 3];
        for k in 0..3 {
            for i in 0..3 {
                jac[(k, i)] = c[k].g[i];
                for j in 0..3 {
                    hessians[k][(i, j)] = c[k].h[i][j];
                }
            }
        }
        Jet2Map3 {
            base,
            value: Vec3::new(c[0].v, c[1].v, c[2].v),
            jacobian: jac,
            hessians,
        }
    }

    /// Second-order Taylor polynomial evaluated at `p`.
    pub fn eval(&self, p: &Vec3) -> Vec3 {
        let d = p - self.base;
        let mut out = self.value + self.jacobian * d;
        for k in 0..3 {
            out[k] += 0.5 * d.dot(&(self.hessians[k] * d));
        }
        out
    }

    /// Jacobian of the Taylor polynomial at `p`.
    pub fn eval_jacobian(&self, p: &Vec3) -> Mat3 {
        let d = p - self.base;
        let mut j = self.jacobian;
        for k in 0..3 {
            let row = self.hessians[k] * d;
            for i in 0..3 {
                j[(k, i)] += row[i];
            }
        }
        j
    }

    /// `outer ∘ inner`; requires `inner.value == outer.base` up to 1e-9.
    pub fn compose(outer: &Jet2Map3, inner: &Jet2Map3) -> Result<Jet2Map3> {
        let gap = (inner.value - outer.base).norm();
        if gap > 1e-9 {
            return Err(Error::BaseMismatch(gap));
        }
        let ji = inner.jacobian;
        let jo = outer.jacobian;
        let mut hessians = [Mat3::zeros(); 3];
        for (k, h) in hessians.iter_mut().enumerate() {
            let mut m = ji.transpose() * outer.hessians[k] * ji;
            for j in 0..3 {
                m += inner.hessians[j] * jo[(k, j)];
            }
            *h = symmetrize(m);
        }
        Ok(Jet2Map3 {
            base: inner.base,
            value: outer.value,
            jacobian: jo * ji,
            hessians,
        })
    }

    /// Jet of the local inverse, based at `self.value`.
    pub fn inverse(&self) -> Result<Jet2Map3> {
        let inv = self
            .jacobian
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular jacobian in jet inverse".into()))?;
        // D²(f⁻¹)_k = -Σ_j (J⁻¹)_kj J⁻ᵀ H_j J⁻¹
        let mut hessians = [Mat3::zeros(); 3];
        let pulled: Vec<Mat3> = self
            .hessians
            .iter()
            .map(|h| inv.transpose() * h * inv)
            .collect();
        for (k, out) in hessians.iter_mut().enumerate() {
            let mut m = Mat3::zeros();
            for (j, p) in pulled.iter().enumerate() {
                m -= p * inv[(k, j)];
            }
            *out = symmetrize(m);
        }
        let jet = Jet2Map3 {
            base: self.value,
            value: self.base,
            jacobian: inv,
            hessians,
        };
        if !jet.is_finite() {
            return Err(Error::NonFinite("jet inverse".into()));
        }
        Ok(jet)
    }

    pub fn is_finite(&self) -> bool {
        self.value.iter().all(|x| x.is_finite())
            && self.jacobian.iter().all(|x| x.is_finite())
            && self
                .hessians
                .iter()
                .all(|h| h.iter().all(|x| x.is_finite()))
    }

    /// Second partial ∂_i ∂_j of output component `k`.
    pub fn partial2(&self, k: usize, i: usize, j: usize) -> f64 {
        self.hessians[k][(i, j)]
    }
}

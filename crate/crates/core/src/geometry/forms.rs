use std::collections::BTreeMap;

use super::{Deck, Manifold};
use crate::calculus::{eval_jet2, parse_expr, Expr, Jet2, Jet2Map3};
use crate::{Mat3, Result, Vec3};

pub type Params = BTreeMap<String, f64>;

/// `a dx + b dy + c dz` on the universal cover.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    pub coeffs: [Expr; 3],
    pub params: Params,
}

impl OneForm {
    pub fn new(coeffs: [Expr; 3], params: Params) -> Self {
        OneForm { coeffs, params }
    }

    pub fn parse(a: &str, b: &str, c: &str) -> Result<Self> {
        Ok(OneForm::new(
            [parse_expr(a)?, parse_expr(b)?, parse_expr(c)?],
            Params::new(),
        ))
    }

    /// `dz - x dy`, the standard contact form on the Heisenberg cover.
    pub fn heisenberg_contact() -> Self {
        OneForm::parse("0", "-x", "1").expect("static form parses")
    }

    /// Differential of a function, via symbolic partials.
    pub fn exact(f: &Expr, params: Params) -> Self {
        OneForm::new([f.derivative(0), f.derivative(1), f.derivative(2)], params)
    }

    pub fn jets(&self, p: &Vec3) -> Result<[Jet2; 3]> {
        let pt = [p.x, p.y, p.z];
        Ok([
            eval_jet2(&self.coeffs[0], pt, &self.params)?,
            eval_jet2(&self.coeffs[1], pt, &self.params)?,
            eval_jet2(&self.coeffs[2], pt, &self.params)?,
        ])
    }

    /// Coefficient covector at `p`.
    pub fn at(&self, p: &Vec3) -> Result<Vec3> {
        let pt = [p.x, p.y, p.z];
        let mut out = Vec3::zeros();
        for i in 0..3 {
            out[i] = self.coeffs[i].eval_at(&pt, &self.params)?;
        }
        Ok(out)
    }

    /// `|Dgᵀ ω(g p) − ω(p)|`: zero when the form descends to the quotient.
    pub fn deck_residual(&self, manifold: Manifold, g: Deck, p: &Vec3) -> Result<f64> {
        let gp = manifold.apply_deck(g, p);
        let pulled = manifold.deck_linear(g).transpose() * self.at(&gp)?;
        Ok((pulled - self.at(p)?).norm())
    }
}

/// Coefficients ordered as `(dx∧dy, dx∧dz, dy∧dz)`.
#[derive(Clone, Debug, PartialEq)]
pub enum TwoForm {
    Coeffs { coeffs: [Expr; 3], params: Params },
    Exterior(OneForm),
}

impl TwoForm {
    /// Coefficient values and their gradients at `p`.
    pub fn jet1(&self, p: &Vec3) -> Result<([f64; 3], [[f64; 3]; 3])> {
        match self {
            TwoForm::Coeffs { coeffs, params } => {
                let pt = [p.x, p.y, p.z];
                let mut v = [0.0; 3];
                let mut g = [[0.0; 3]; 3];
                for i in 0..3 {
                    let j = eval_jet2(&coeffs[i], pt, params)?;
                    v[i] = j.v;
                    g[i] = j.g;
                }
                Ok((v, g))
            }
            TwoForm::Exterior(w) => {
                let [a, b, c] = w.jets(p)?;
                let v = [b.g[0] - a.g[1], c.g[0] - a.g[2], c.g[1] - b.g[2]];
                let mut g = [[0.0; 3]; 3];
                for k in 0..3 {
                    g[0][k] = b.h[0][k] - a.h[1][k];
                    g[1][k] = c.h[0][k] - a.h[2][k];
                    g[2][k] = c.h[1][k] - b.h[2][k];
                }
                Ok((v, g))
            }
        }
    }

    pub fn at(&self, p: &Vec3) -> Result<[f64; 3]> {
        Ok(self.jet1(p)?.0)
    }

    /// Antisymmetric matrix `Ω` with `β(u, v) = uᵀ Ω v`.
    pub fn matrix(&self, p: &Vec3) -> Result<Mat3> {
        let [xy, xz, yz] = self.at(p)?;
        Ok(Mat3::new(0.0, xy, xz, -xy, 0.0, yz, -xz, -yz, 0.0))
    }
}

/// Coefficient of `dx∧dy∧dz`.
#[derive(Clone, Debug, PartialEq)]
pub enum VolumeForm {
    Coeff { coeff: Expr, params: Params },
    Wedge(OneForm, TwoForm),
    Exterior(TwoForm),
}

impl VolumeForm {
    pub fn standard() -> Self {
        VolumeForm::Coeff {
            coeff: Expr::Num(1.0),
            params: Params::new(),
        }
    }

    pub fn at(&self, p: &Vec3) -> Result<f64> {
        match self {
            VolumeForm::Coeff { coeff, params } => coeff.eval_at(&[p.x, p.y, p.z], params),
            VolumeForm::Wedge(w, b) => {
                let a = w.at(p)?;
                let [xy, xz, yz] = b.at(p)?;
                Ok(a[0] * yz - a[1] * xz + a[2] * xy)
            }
            VolumeForm::Exterior(b) => {
                let (_, g) = b.jet1(p)?;
                Ok(g[2][0] - g[1][1] + g[0][2])
            }
        }
    }
}

pub fn exterior_derivative(w: &OneForm) -> TwoForm {
    TwoForm::Exterior(w.clone())
}

pub fn exterior_derivative2(b: &TwoForm) -> VolumeForm {
    VolumeForm::Exterior(b.clone())
}

pub fn wedge(w: &OneForm, b: &TwoForm) -> VolumeForm {
    VolumeForm::Wedge(w.clone(), b.clone())
}

/// Coefficients of `f*ω` at `jet.base` given `ω` at `jet.value`.
pub fn pullback_oneform(jet: &Jet2Map3, w_at_image: &Vec3) -> Vec3 {
    jet.jacobian.transpose() * w_at_image
}

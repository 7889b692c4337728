use std::collections::BTreeMap;

use crate::calculus::{parse_expr, Compiled, Dual, Expr, Jet2, Jet2Map3, Scalar};
use crate::geometry::{Deck, Manifold, OneForm, Point};
use crate::{Error, Mat3, Result, Vec3};

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX: usize = 50;

/// A diffeomorphism of a quotient 3-manifold given by cover formulas.
#[derive(Clone, Debug)]
pub struct MapSpec {
    pub name: String,
    pub manifold: Manifold,
    pub components: [Expr; 3],
    pub inverse: Option<[Expr; 3]>,
    pub params: BTreeMap<String, f64>,
    pub volume_preserving: bool,
    /// Form whose kernel should be the stable-unstable plane; fixes the center frame.
    pub contact_form: Option<OneForm>,
    /// Components 0,1 do not depend on z and the z-component is `z + τ(x,y)`.
    pub fibered: bool,
    compiled: [Compiled; 3],
    compiled_inv: Option<[Compiled; 3]>,
    param_names: Vec<String>,
    param_values: Vec<f64>,
}

fn compile3(e: &[Expr; 3], names: &[String]) -> Result<[Compiled; 3]> {
    Ok([
        e[0].compile(names)?,
        e[1].compile(names)?,
        e[2].compile(names)?,
    ])
}

impl MapSpec {
    pub fn new(
        name: &str,
        manifold: Manifold,
        components: [Expr; 3],
        inverse: Option<[Expr; 3]>,
        params: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let param_names: Vec<String> = params.keys().cloned().collect();
        let param_values: Vec<f64> = params.values().copied().collect();
        let compiled = compile3(&components, &param_names)?;
        let compiled_inv = match &inverse {
            Some(inv) => Some(compile3(inv, &param_names)?),
            None => None,
        };
        let mut spec = MapSpec {
            name: name.to_string(),
            manifold,
            components,
            inverse,
            params,
            volume_preserving: false,
            contact_form: None,
            fibered: false,
            compiled,
            compiled_inv,
            param_names,
            param_values,
        };
        spec.fibered = spec.detect_fibered()?;
        Ok(spec)
    }

    /// Parse three component strings (and optional inverse strings).
    pub fn from_strings(
        name: &str,
        manifold: Manifold,
        components: [&str; 3],
        inverse: Option<[&str; 3]>,
        params: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let comps = [
            parse_expr(components[0])?,
            parse_expr(components[1])?,
            parse_expr(components[2])?,
        ];
        let inv = match inverse {
            Some(i) => Some([parse_expr(i[0])?, parse_expr(i[1])?, parse_expr(i[2])?]),
            None => None,
        };
        MapSpec::new(name, manifold, comps, inv, params)
    }

    pub fn with_volume_preserving(mut self, v: bool) -> Self {
        self.volume_preserving = v;
        self
    }

    pub fn with_contact_form(mut self, w: OneForm) -> Self {
        self.contact_form = Some(w);
        self
    }

    /// Copy with one parameter rebound.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let Some(i) = self.param_names.iter().position(|n| n == name) else {
            return Err(Error::UnboundParameter(name.to_string()));
        };
        let mut s = self.clone();
        s.params.insert(name.to_string(), value);
        s.param_values[i] = value;
        Ok(s)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    fn detect_fibered(&self) -> Result<bool> {
        for i in 0..7 {
            let t = i as f64 / 7.0;
            let p = Vec3::new(0.13 + 0.7 * t, 0.61 - 0.5 * t, 0.37 + 0.2 * t);
            let j = match self.jacobian(&p) {
                Ok(j) => j,
                Err(_) => return Ok(false),
            };
            if j[(0, 2)] != 0.0 || j[(1, 2)] != 0.0 || j[(2, 2)] != 1.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Evaluate the cover formulas over any scalar type with explicit parameter values.
    pub fn eval_with<T: Scalar>(&self, v: &[T; 3], params: &[T]) -> Result<[T; 3]> {
        Ok([
            self.compiled[0].eval(v, params)?,
            self.compiled[1].eval(v, params)?,
            self.compiled[2].eval(v, params)?,
        ])
    }

    pub fn eval_generic<T: Scalar>(&self, v: &[T; 3]) -> Result<[T; 3]> {
        let params: Vec<T> = self
            .param_values
            .iter()
            .map(|c| v[0].constant_like(*c))
            .collect();
        self.eval_with(v, &params)
    }

    /// Declared inverse over any scalar type, if present.
    pub fn eval_inverse_generic<T: Scalar>(&self, v: &[T; 3]) -> Option<Result<[T; 3]>> {
        let inv = self.compiled_inv.as_ref()?;
        let params: Vec<T> = self
            .param_values
            .iter()
            .map(|c| v[0].constant_like(*c))
            .collect();
        Some((|| {
            Ok([
                inv[0].eval(v, &params)?,
                inv[1].eval(v, &params)?,
                inv[2].eval(v, &params)?,
            ])
        })())
    }

    /// Map on the universal cover.
    pub fn lift(&self, p: &Vec3) -> Result<Vec3> {
        let r = self.eval_generic(&[p.x, p.y, p.z])?;
        Ok(Vec3::new(r[0], r[1], r[2]))
    }

    pub fn jacobian(&self, p: &Vec3) -> Result<Mat3> {
        let v = [
            Dual::<3>::variable(p.x, 0),
            Dual::variable(p.y, 1),
            Dual::variable(p.z, 2),
        ];
        let r = self.eval_generic(&v)?;
        Ok(Mat3::from_fn(|i, j| r[i].d[j]))
    }

    /// Value, jacobian and derivative with respect to parameter `name`.
    pub fn param_derivative(&self, p: &Vec3, name: &str) -> Result<(Vec3, Mat3, Vec3)> {
        let idx = self
            .param_index(name)
            .ok_or_else(|| Error::UnboundParameter(name.to_string()))?;
        let v = [
            Dual::<4>::variable(p.x, 0),
            Dual::variable(p.y, 1),
            Dual::variable(p.z, 2),
        ];
        let mut params: Vec<Dual<4>> = self
            .param_values
            .iter()
            .map(|c| Dual::constant(*c))
            .collect();
        params[idx] = Dual::variable(self.param_values[idx], 3);
        let r = self.eval_with(&v, &params)?;
        Ok((
            Vec3::new(r[0].v, r[1].v, r[2].v),
            Mat3::from_fn(|i, j| r[i].d[j]),
            Vec3::new(r[0].d[3], r[1].d[3], r[2].d[3]),
        ))
    }

    pub fn jet2_at(&self, p: &Vec3) -> Result<Jet2Map3> {
        let v = [
            Jet2::variable(p.x, 0),
            Jet2::variable(p.y, 1),
            Jet2::variable(p.z, 2),
        ];
        Ok(Jet2Map3::from_components(*p, &self.eval_generic(&v)?))
    }

    /// Preimage on the cover: declared inverse when present, then Newton polish.
    pub fn lift_inverse(&self, q: &Vec3) -> Result<Vec3> {
        let mut p = match self.eval_inverse_generic(&[q.x, q.y, q.z]) {
            Some(r) => {
                let r = r?;
                Vec3::new(r[0], r[1], r[2])
            }
            None => *q,
        };
        let scale = 1.0 + q.norm();
        for _ in 0..NEWTON_MAX {
            let f = self.lift(&p)? - q;
            if f.norm() <= NEWTON_TOL * scale {
                return Ok(p);
            }
            let j = self.jacobian(&p)?;
            let step = j
                .lu()
                .solve(&f)
                .ok_or_else(|| Error::Newton("singular jacobian in inverse".into()))?;
            p -= step;
            if !p.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite("inverse iteration".into()));
            }
        }
        let f = (self.lift(&p)? - q).norm();
        if f <= NEWTON_TOL * scale {
            Ok(p)
        } else {
            Err(Error::Newton(format!(
                "inverse residual {f:e} after {NEWTON_MAX} iterations"
            )))
        }
    }

    /// Reduced image of a point together with the deck used.
    pub fn step(&self, p: &Vec3) -> Result<(Vec3, Deck)> {
        Ok(self.manifold.reduce(&self.lift(p)?))
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        let (q, _) = self.step(&p.vec())?;
        Ok(Point::from_vec(self.manifold, &q))
    }

    pub fn jet2(&self, p: &Point) -> Result<Jet2Map3> {
        self.jet2_at(&p.vec())
    }

    pub fn inverse_apply(&self, q: &Point) -> Result<Point> {
        let p = self.lift_inverse(&q.vec())?;
        Ok(Point::from_vec(self.manifold, &self.manifold.reduce(&p).0))
    }

    /// Max over `points × generators` of the quotient distance between
    /// `f(g p)` and `f(p)`; zero when the formulas descend to the quotient.
    pub fn deck_commutation_residual(&self, points: &[Vec3]) -> Result<f64> {
        let gens = [Deck::new(1, 0, 0), Deck::new(0, 1, 0), Deck::new(0, 0, 1)];
        let mut worst: f64 = 0.0;
        for p in points {
            let fp = self.lift(p)?;
            for g in gens {
                if self.manifold == Manifold::Torus2 && g.k != 0.0 {
                    continue;
                }
                let fgp = self.lift(&self.manifold.apply_deck(g, p))?;
                let h = self.manifold.deck_between(&fgp, &fp);
                worst = worst.max((self.manifold.apply_deck(h, &fgp) - fp).norm());
            }
        }
        Ok(worst)
    }
}

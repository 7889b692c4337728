use serde::{Deserialize, Serialize};

use super::leaf::{Flavor, LeafParam, LEAF_DEPTH};
use crate::calculus::Jet2Map3;
use crate::geometry::Deck;
use crate::maps::{MapSpec, Orbit};
use crate::splitting::{compute_splitting, Splitting3, DEFAULT_DEPTH};
use crate::{Error, Mat3, Result, Vec3};

/// How the chart surface bends in the mixed `ξη` direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartFamily {
    /// Unstable leaves through the points of the stable leaf.
    Holonomy,
    /// Sum of the two leaf displacements; no mixed term.
    LeafSum,
    /// Mixed term along the center, chosen so the stable template has no linear part.
    TemplateNormalized,
}

impl ChartFamily {
    pub fn parse(s: &str) -> Option<ChartFamily> {
        match s {
            "holonomy" => Some(ChartFamily::Holonomy),
            "leafsum" | "leaf-sum" => Some(ChartFamily::LeafSum),
            "templatenormalized" | "normalized" => Some(ChartFamily::TemplateNormalized),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartOptions {
    pub family: ChartFamily,
    /// Constant factor on the center coordinate.
    pub center_scale: f64,
    pub leaf_depth: usize,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions {
            family: ChartFamily::Holonomy,
            center_scale: 1.0,
            leaf_depth: LEAF_DEPTH,
        }
    }
}

const FD_STEP: f64 = 1e-3;

/// Adapted chart `ı_x(ξ, t, η)` at `x`, kept to second order as an exact
/// quadratic map with first-order frame `(e_s, e_c, e_u)`.
#[derive(Clone, Debug)]
pub struct AdaptedChart {
    pub base: Vec3,
    pub options: ChartOptions,
    pub e_s: Vec3,
    pub e_c: Vec3,
    pub e_u: Vec3,
    pub stable: LeafParam,
    pub unstable: LeafParam,
    /// Quadratic chart as a jet based at the origin.
    pub quadratic: Jet2Map3,
}

fn aligned(v: Vec3, reference: &Vec3) -> Vec3 {
    if v.dot(reference) < 0.0 {
        -v
    } else {
        v
    }
}

fn splitting_at(map: &MapSpec, p: &Vec3) -> Result<Splitting3> {
    compute_splitting(map, p, DEFAULT_DEPTH)
}

// Richardson-extrapolated central difference of a unit vector field along `dir`.
fn directional_derivative(
    map: &MapSpec,
    x: &Vec3,
    dir: &Vec3,
    reference: &Vec3,
    pick: impl Fn(&Splitting3) -> Vec3,
) -> Result<Vec3> {
    let field = |t: f64| -> Result<Vec3> {
        Ok(aligned(
            pick(&splitting_at(map, &(x + dir * t))?),
            reference,
        ))
    };
    let central = |h: f64| -> Result<Vec3> { Ok((field(h)? - field(-h)?) / (2.0 * h)) };
    let d1 = central(FD_STEP)?;
    let d2 = central(FD_STEP / 2.0)?;
    Ok((d2 * 4.0 - d1) / 3.0)
}

impl AdaptedChart {
    pub fn build(map: &MapSpec, x: &Vec3, options: ChartOptions) -> Result<AdaptedChart> {
        if !(options.center_scale.is_finite() && options.center_scale != 0.0) {
            return Err(Error::Precondition(
                "center scale must be finite and nonzero".into(),
            ));
        }
        let sp = splitting_at(map, x)?;
        let stable = LeafParam::with_depth(map, x, Flavor::Stable, options.leaf_depth)?;
        let unstable = LeafParam::with_depth(map, x, Flavor::Unstable, options.leaf_depth)?;
        let (e_s, e_u, e_c) = (stable.direction, unstable.direction, sp.e_c);
        let a = options.center_scale;

        let (_, ss) = stable.second_order()?;
        let (_, uu) = unstable.second_order()?;
        let dc_s = directional_derivative(map, x, &e_s, &e_c, |s| s.e_c)? * a;
        let dc_u = directional_derivative(map, x, &e_u, &e_c, |s| s.e_c)? * a;
        let su = match options.family {
            ChartFamily::Holonomy => directional_derivative(map, x, &e_s, &e_u, |s| s.e_u)?,
            ChartFamily::LeafSum => Vec3::zeros(),
            ChartFamily::TemplateNormalized => {
                let nu = sp.n_su();
                let dnu = directional_derivative(map, x, &e_u, &nu, |s| s.n_su())?;
                e_c * (-dnu.dot(&e_s) / nu.dot(&e_c))
            }
        };

        let frame = Mat3::from_columns(&[e_s, e_c * a, e_u]);
        if frame.determinant().abs() < 1e-8 {
            return Err(Error::Degenerate("ill-conditioned chart frame".into()));
        }
        let mut hessians = [Mat3::zeros(); 3];
        for (k, h) in hessians.iter_mut().enumerate() {
            h[(0, 0)] = ss[k];
            h[(2, 2)] = uu[k];
            h[(0, 2)] = su[k];
            h[(2, 0)] = su[k];
            h[(0, 1)] = dc_s[k];
            h[(1, 0)] = dc_s[k];
            h[(1, 2)] = dc_u[k];
            h[(2, 1)] = dc_u[k];
        }
        let quadratic = Jet2Map3 {
            base: Vec3::zeros(),
            value: *x,
            jacobian: frame,
            hessians,
        };
        Ok(AdaptedChart {
            base: *x,
            options,
            e_s,
            e_c,
            e_u,
            stable,
            unstable,
            quadratic,
        })
    }

    /// Surface point `σ_x(ξ, η)`.
    pub fn surface(&self, map: &MapSpec, xi: f64, eta: f64) -> Result<Vec3> {
        let p = self.stable.point(map, xi)?;
        match self.options.family {
            ChartFamily::Holonomy => {
                if eta == 0.0 {
                    return Ok(p);
                }
                let leaf =
                    LeafParam::with_depth(map, &p, Flavor::Unstable, self.options.leaf_depth)?;
                let sign = leaf.direction.dot(&self.e_u).signum();
                leaf.point(map, sign * eta)
            }
            ChartFamily::LeafSum => Ok(p + self.unstable.point(map, eta)? - self.base),
            ChartFamily::TemplateNormalized => {
                let bend = self.quadratic.hessians.map(|h| h[(0, 2)]);
                Ok(p + self.unstable.point(map, eta)? - self.base + Vec3::from(bend) * (xi * eta))
            }
        }
    }

    /// Full chart `ı_x(ξ, t, η)`: the surface point displaced along the center direction there.
    pub fn embed(&self, map: &MapSpec, v: &Vec3) -> Result<Vec3> {
        let p = self.surface(map, v.x, v.z)?;
        if v.y == 0.0 {
            return Ok(p);
        }
        let c = aligned(splitting_at(map, &p)?.e_c, &self.e_c);
        Ok(p + c * (v.y * self.options.center_scale))
    }

    /// Quadratic chart `Q_x(v)`.
    pub fn quad(&self, v: &Vec3) -> Vec3 {
        self.quadratic.eval(v)
    }

    pub fn quad_jacobian(&self, v: &Vec3) -> Mat3 {
        self.quadratic.eval_jacobian(v)
    }

    /// `Q_x^{-1}(p)` by Newton, started from the linear inverse.
    pub fn quad_inverse(&self, p: &Vec3) -> Result<Vec3> {
        let a_inv = self
            .quadratic
            .jacobian
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular chart frame".into()))?;
        let mut v = a_inv * (p - self.base);
        for _ in 0..40 {
            let r = self.quad(&v) - p;
            let step = self
                .quad_jacobian(&v)
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::Newton("singular quadratic chart".into()))?;
            v -= step;
            if step.norm() <= 1e-13 * v.norm() + 1e-16 {
                return Ok(v);
            }
        }
        Err(Error::Newton(
            "quadratic chart inversion did not settle".into(),
        ))
    }
}

/// Chart at `x`, chart at its image, and the 2-jet of `F_x = ı_{f x}^{-1} ∘ f ∘ ı_x` at 0.
#[derive(Clone, Debug)]
pub struct ChartPair {
    pub here: AdaptedChart,
    pub there: AdaptedChart,
    pub deck: Deck,
    pub jet: Jet2Map3,
}

impl ChartPair {
    /// `λ^s_x, λ^c_x, λ^u_x` read off the diagonal of `DF_x(0)`.
    pub fn multipliers(&self) -> [f64; 3] {
        let j = &self.jet.jacobian;
        [j[(0, 0)], j[(1, 1)], j[(2, 2)]]
    }

    /// `F_x(v)` through the quadratic charts.
    pub fn eval(&self, map: &MapSpec, v: &Vec3) -> Result<Vec3> {
        let p = self.here.quad(v);
        let q = map.manifold.apply_deck(self.deck, &map.lift(&p)?);
        self.there.quad_inverse(&q)
    }

    pub fn jacobian(&self, map: &MapSpec, v: &Vec3) -> Result<Mat3> {
        let p = self.here.quad(v);
        let q = map.manifold.apply_deck(self.deck, &map.lift(&p)?);
        let w = self.there.quad_inverse(&q)?;
        let inner =
            map.manifold.deck_linear(self.deck) * map.jacobian(&p)? * self.here.quad_jacobian(v);
        self.there
            .quad_jacobian(&w)
            .lu()
            .solve(&inner)
            .ok_or_else(|| Error::Degenerate("singular chart jacobian".into()))
    }
}

/// 2-jet of `Q_{fx}^{-1} ∘ f ∘ Q_x` at the origin.
pub fn conjugated_jet(
    map: &MapSpec,
    here: &AdaptedChart,
    there: &AdaptedChart,
    deck: Deck,
) -> Result<Jet2Map3> {
    let raw = map.jet2_at(&here.base)?;
    let d = map.manifold.deck_linear(deck);
    let mut hessians = [Mat3::zeros(); 3];
    for (i, h) in hessians.iter_mut().enumerate() {
        for j in 0..3 {
            *h += raw.hessians[j] * d[(i, j)];
        }
    }
    let f = Jet2Map3 {
        base: raw.base,
        value: map.manifold.apply_deck(deck, &raw.value),
        jacobian: d * raw.jacobian,
        hessians,
    };
    let inner = Jet2Map3::compose(&f, &here.quadratic)?;
    Jet2Map3::compose(&there.quadratic.inverse()?, &inner)
}

/// Charts at `x` and `f(x)` with the conjugated jet.
pub fn build_adapted_chart(map: &MapSpec, x: &Vec3, options: ChartOptions) -> Result<ChartPair> {
    let orbit = Orbit::new(map, x, 0, 1)?;
    let here = AdaptedChart::build(map, x, options)?;
    let there = AdaptedChart::build(map, &orbit.at(1), options)?;
    pair_from(map, here, there, orbit.deck(0))
}

pub fn pair_from(
    map: &MapSpec,
    here: AdaptedChart,
    there: AdaptedChart,
    deck: Deck,
) -> Result<ChartPair> {
    let jet = conjugated_jet(map, &here, &there, deck)?;
    Ok(ChartPair {
        here,
        there,
        deck,
        jet,
    })
}

/// `α^FH_x = ∂_ξ ∂_η` of the center component of `F_x` at the origin.
pub fn fh_coefficient(map: &MapSpec, x: &Vec3) -> Result<f64> {
    fh_coefficient_with(map, x, ChartOptions::default())
}

pub fn fh_coefficient_with(map: &MapSpec, x: &Vec3, options: ChartOptions) -> Result<f64> {
    Ok(fh_of(&build_adapted_chart(map, x, options)?))
}

pub fn fh_of(pair: &ChartPair) -> f64 {
    pair.jet.partial2(1, 0, 2)
}

/// Comparison of two chart families at the same point.
#[derive(Clone, Debug, Serialize)]
pub struct ChartChange {
    pub alpha_a: f64,
    pub alpha_b: f64,
    /// `α_b` predicted from `α_a`, the multipliers and the chart-difference jets.
    pub predicted_b: f64,
    pub residual: f64,
    /// `∂_ξ ∂_η` of the center component of `ı^b_x⁻¹ ∘ ı^a_x` at `x` and `f(x)`.
    pub beta_x: f64,
    pub beta_fx: f64,
}

fn difference_jet(a: &AdaptedChart, b: &AdaptedChart) -> Result<Jet2Map3> {
    Jet2Map3::compose(&b.quadratic.inverse()?, &a.quadratic)
}

/// Both sides of the chart-change identity
/// `α_b(x) = λ^sλ^u β(fx) + a_{fx} (α_a(x) − λ^c β(x) / a_x)`,
/// where `a` is the center scale of the difference map.
pub fn chart_change(
    map: &MapSpec,
    x: &Vec3,
    a: ChartOptions,
    b: ChartOptions,
) -> Result<ChartChange> {
    let pa = build_adapted_chart(map, x, a)?;
    let pb = build_adapted_chart(map, x, b)?;
    let psi_x = difference_jet(&pa.here, &pb.here)?;
    let psi_fx = difference_jet(&pa.there, &pb.there)?;
    let [ls, lc, lu] = pa.multipliers();
    let (beta_x, beta_fx) = (psi_x.partial2(1, 0, 2), psi_fx.partial2(1, 0, 2));
    let (ax, afx) = (psi_x.jacobian[(1, 1)], psi_fx.jacobian[(1, 1)]);
    let alpha_a = fh_of(&pa);
    let alpha_b = fh_of(&pb);
    let predicted_b = ls * lu * beta_fx + afx * (alpha_a - lc * beta_x / ax);
    Ok(ChartChange {
        alpha_a,
        alpha_b,
        predicted_b,
        residual: (alpha_b - predicted_b).abs(),
        beta_x,
        beta_fx,
    })
}

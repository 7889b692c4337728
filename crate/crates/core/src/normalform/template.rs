use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::chart::{pair_from, AdaptedChart, ChartOptions, ChartPair};
use super::leaf::Flavor;
use crate::maps::{MapSpec, Orbit};
use crate::splitting::{compute_splitting, DEFAULT_DEPTH};
use crate::{Error, Result, Vec3};

/// Largest leaf parameter used when a grid is rescaled by a multiplier.
const MAX_RADIUS: f64 = 0.5;

#[derive(Clone, Debug, Serialize)]
pub struct TemplateSample {
    pub base: Vec3,
    pub flavor: Flavor,
    pub eta: Vec<f64>,
    pub values: Vec<f64>,
    /// Least-squares `c0 + c1 η + c2 η²`; absent on grids of fewer than three points.
    pub fit: Option<[f64; 3]>,
}

/// Least-squares coefficients of `Σ_{k ∈ powers} c_k t^k`.
pub fn poly_fit(t: &[f64], y: &[f64], powers: &[i32]) -> Result<Vec<f64>> {
    if t.len() < powers.len() {
        return Err(Error::Precondition(
            "fit needs at least as many points as coefficients".into(),
        ));
    }
    let a = DMatrix::from_fn(t.len(), powers.len(), |i, j| t[i].powi(powers[j]));
    let b = DVector::from_column_slice(y);
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Degenerate(format!("polynomial fit: {e}")))?;
    Ok(sol.iter().copied().collect())
}

/// Least-squares slope of `log y` against `log x` over entries with both positive.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Template value at one leaf parameter: slope of `E^s⊕E^u` against the
/// horizontal chart plane, in the chart frame along the axis.
fn template_value(map: &MapSpec, chart: &AdaptedChart, flavor: Flavor, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let (leaf_point, v, along) = match flavor {
        Flavor::Stable => (chart.unstable.point(map, s)?, Vec3::new(0.0, 0.0, s), 0),
        Flavor::Unstable => (chart.stable.point(map, s)?, Vec3::new(s, 0.0, 0.0), 2),
    };
    let normal = compute_splitting(map, &leaf_point, DEFAULT_DEPTH)?.n_su();
    let frame = chart.quad_jacobian(&v);
    let vertical = frame.column(1).into_owned();
    let den = normal.dot(&vertical);
    if den.abs() < 1e-6 * vertical.norm() {
        return Err(Error::Degenerate(format!(
            "plane nearly vertical at leaf parameter {s}"
        )));
    }
    Ok(-normal.dot(&frame.column(along).into_owned()) / den)
}

/// Template of the given flavor at the chart's base point.
pub fn sample_template(
    map: &MapSpec,
    chart: &AdaptedChart,
    flavor: Flavor,
    grid: &[f64],
) -> Result<TemplateSample> {
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&s| template_value(map, chart, flavor, s))
        .collect::<Result<_>>()?;
    let fit = match grid.len() {
        0..=2 => None,
        _ => {
            let c = poly_fit(grid, &values, &[0, 1, 2])?;
            Some([c[0], c[1], c[2]])
        }
    };
    Ok(TemplateSample {
        base: chart.base,
        flavor,
        eta: grid.to_vec(),
        values,
        fit,
    })
}

/// Off-diagonal function along the leaf axis: `∂_ξ F_{x,2}(0,0,η)` for the
/// stable flavor, `∂_η F_{x,2}(ξ,0,0)` for the unstable one.
pub fn off_diagonal(map: &MapSpec, pair: &ChartPair, flavor: Flavor, s: f64) -> Result<f64> {
    let (v, col) = match flavor {
        Flavor::Stable => (Vec3::new(0.0, 0.0, s), 0),
        Flavor::Unstable => (Vec3::new(s, 0.0, 0.0), 2),
    };
    Ok(pair.jacobian(map, &v)?[(1, col)])
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualProfile {
    pub base: Vec3,
    pub flavor: Flavor,
    pub eta: Vec<f64>,
    pub off_diagonal: Vec<f64>,
    pub predicted: Vec<f64>,
    pub residual: Vec<f64>,
    /// Log-log slope of the residual against `|η|`.
    pub slope: Option<f64>,
}

/// Residual of the template equation
/// `r^s_x(η) = λ^s_x T^s_{fx}(λ^u_x η) − λ^c_x T^s_x(η)` (and its unstable mirror).
pub fn template_equation_residual(
    map: &MapSpec,
    x: &Vec3,
    flavor: Flavor,
    grid: &[f64],
    options: ChartOptions,
) -> Result<ResidualProfile> {
    let pair = super::chart::build_adapted_chart(map, x, options)?;
    residual_for_pair(map, &pair, flavor, grid)
}

pub fn residual_for_pair(
    map: &MapSpec,
    pair: &ChartPair,
    flavor: Flavor,
    grid: &[f64],
) -> Result<ResidualProfile> {
    let [ls, lc, lu] = pair.multipliers();
    let (outer, stretch) = match flavor {
        Flavor::Stable => (ls, lu),
        Flavor::Unstable => (lu, ls),
    };
    let image_grid: Vec<f64> = grid.iter().map(|s| stretch * s).collect();
    if image_grid.iter().any(|s| s.abs() > MAX_RADIUS) {
        return Err(Error::Precondition(format!(
            "grid misalignment: image parameters exceed the leaf radius {MAX_RADIUS}"
        )));
    }
    let here = sample_template(map, &pair.here, flavor, grid)?;
    let there = sample_template(map, &pair.there, flavor, &image_grid)?;
    let r: Vec<f64> = grid
        .par_iter()
        .map(|&s| off_diagonal(map, pair, flavor, s))
        .collect::<Result<_>>()?;
    let predicted: Vec<f64> = (0..grid.len())
        .map(|i| outer * there.values[i] - lc * here.values[i])
        .collect();
    let residual: Vec<f64> = r
        .iter()
        .zip(&predicted)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let abs: Vec<f64> = grid.iter().map(|s| s.abs()).collect();
    Ok(ResidualProfile {
        base: pair.here.base,
        flavor,
        eta: grid.to_vec(),
        off_diagonal: r,
        predicted,
        residual: residual.clone(),
        slope: loglog_slope(&abs, &residual),
    })
}

/// Half-width and size of the grid used for the quadratic fits of `r^s`.
pub const FIT_HALF_WIDTH: f64 = 0.05;
pub const FIT_POINTS: usize = 9;

#[derive(Clone, Debug, Serialize)]
pub struct SeriesReport {
    pub base: Vec3,
    pub terms: usize,
    pub eta: Vec<f64>,
    pub series: Vec<f64>,
    pub template: Vec<f64>,
    pub sup_difference: f64,
    /// Geometric mean per-step ratio of the quadratic term weights.
    pub decay_ratio: f64,
    /// Quadratic coefficient of `r^s` at each backward orbit point.
    pub quadratic_coefficients: Vec<f64>,
}

pub const DECAY_LIMIT: f64 = 0.95;

/// Series weights `(λ^s_x(−ℓ)/λ^c_x(−(ℓ−1)), λ^u_x(−ℓ))` from the one-step
/// multipliers `(λ^s, λ^c, λ^u)` at `f^{−1}x, f^{−2}x, …`, and the decay ratio
/// of the quadratic terms. Refuses when that ratio exceeds [`DECAY_LIMIT`].
pub fn series_weights(multipliers: &[[f64; 3]]) -> Result<(Vec<(f64, f64)>, f64)> {
    let terms = multipliers.len();
    if terms == 0 {
        return Ok((vec![], 0.0));
    }
    let (mut ls, mut lu, mut lc_prev) = (1.0, 1.0, 1.0);
    let mut weights = Vec::with_capacity(terms);
    let mut quad_weights = Vec::with_capacity(terms);
    for m in multipliers {
        ls /= m[0];
        lu /= m[2];
        weights.push((ls / lc_prev, lu));
        quad_weights.push((ls * lu * lu / lc_prev).abs());
        lc_prev /= m[1];
    }
    let decay_ratio = if terms > 1 {
        (quad_weights[terms - 1] / quad_weights[0]).powf(1.0 / (terms - 1) as f64)
    } else {
        quad_weights[0]
    };
    if !(decay_ratio <= DECAY_LIMIT) {
        return Err(Error::Precondition(format!(
            "series terms do not decay: ratio {decay_ratio:.4} exceeds {DECAY_LIMIT}"
        )));
    }
    Ok((weights, decay_ratio))
}

/// Telescoped backward series for the stable template,
/// `Σ_ℓ (λ^s_x(−ℓ) / λ^c_x(−(ℓ−1))) P_{f^{−ℓ}x}(λ^u_x(−ℓ) η)`,
/// with `P` the quadratic part of a least-squares fit of `r^s`.
pub fn reconstruct_template_series(
    map: &MapSpec,
    x: &Vec3,
    terms: usize,
    grid: &[f64],
    options: ChartOptions,
) -> Result<SeriesReport> {
    let orbit = Orbit::new(map, x, terms, 0)?;
    let charts: Vec<AdaptedChart> = (0..=terms)
        .into_par_iter()
        .map(|l| AdaptedChart::build(map, &orbit.at(-(l as isize)), options))
        .collect::<Result<_>>()?;
    let template = sample_template(map, &charts[0], Flavor::Stable, grid)?;
    if terms == 0 {
        let sup = template.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        return Ok(SeriesReport {
            base: *x,
            terms,
            eta: grid.to_vec(),
            series: vec![0.0; grid.len()],
            template: template.values,
            sup_difference: sup,
            decay_ratio: 0.0,
            quadratic_coefficients: vec![],
        });
    }
    let fit_grid: Vec<f64> = (0..FIT_POINTS)
        .map(|i| -FIT_HALF_WIDTH + 2.0 * FIT_HALF_WIDTH * i as f64 / (FIT_POINTS - 1) as f64)
        .collect();
    // pair ℓ maps the chart at x_ℓ = f^{-ℓ}x to the chart at x_{ℓ-1}
    let fits: Vec<([f64; 3], f64)> = (1..=terms)
        .into_par_iter()
        .map(|l| {
            let pair = pair_from(
                map,
                charts[l].clone(),
                charts[l - 1].clone(),
                orbit.deck(-(l as isize)),
            )?;
            let r: Vec<f64> = fit_grid
                .iter()
                .map(|&s| off_diagonal(map, &pair, Flavor::Stable, s))
                .collect::<Result<_>>()?;
            let c = poly_fit(&fit_grid, &r, &[1, 2, 3, 4])?;
            Ok((pair.multipliers(), c[1]))
        })
        .collect::<Result<_>>()?;

    let multipliers: Vec<[f64; 3]> = fits.iter().map(|f| f.0).collect();
    let (weights, decay_ratio) = series_weights(&multipliers)?;
    let series: Vec<f64> = grid
        .iter()
        .map(|&s| {
            weights
                .iter()
                .zip(&fits)
                .map(|((w, u), (_, a2))| w * a2 * (u * s).powi(2))
                .sum()
        })
        .collect();
    let sup_difference = series
        .iter()
        .zip(&template.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(SeriesReport {
        base: *x,
        terms,
        eta: grid.to_vec(),
        series,
        template: template.values,
        sup_difference,
        decay_ratio,
        quadratic_coefficients: fits.iter().map(|f| f.1).collect(),
    })
}

//! Leaf linearizations, adapted charts and templates.

mod chart;
mod leaf;
mod template;

pub use chart::{
    build_adapted_chart, chart_change, conjugated_jet, fh_coefficient, fh_coefficient_with, fh_of,
    pair_from, AdaptedChart, ChartChange, ChartFamily, ChartOptions, ChartPair,
};
pub use leaf::{conjugacy_residual, leaf_point, Flavor, LeafParam, LEAF_DEPTH};
pub use template::{
    loglog_slope, off_diagonal, poly_fit, reconstruct_template_series, residual_for_pair,
    sample_template, series_weights, template_equation_residual, ResidualProfile, SeriesReport,
    TemplateSample, DECAY_LIMIT, FIT_HALF_WIDTH, FIT_POINTS,
};

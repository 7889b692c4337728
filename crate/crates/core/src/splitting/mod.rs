//! Invariant splittings, exponents, certification and plane-field regularity.

mod certify;
mod compute;
mod exponents;

pub use certify::{
    certify_partial_hyperbolicity, estimate_plane_regularity, r_bunched, sample_pairs,
    strongly_r_bunched, Certificate, PlaneRegularity,
};
pub use compute::{
    compute_splitting, compute_splitting_seeded, line_angle, orient, splitting_from_orbit,
    Splitting3, DEFAULT_DEPTH, DEFAULT_SEED, THETA_MIN,
};
pub use exponents::{
    center_size, finite_time_exponents, finite_time_with, lyapunov_exponents, ExponentReport,
    Multipliers,
};

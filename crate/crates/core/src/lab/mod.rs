//! Experiment configuration, pipelines, reports and the rotation-number experiment.

mod config;
mod heisenberg;
mod pipelines;
mod report;

pub use config::{
    Experiment, ExperimentConfig, Format, Forms, MapSection, Output, Sampling, OUT_DIR_ENV,
    PIPELINES,
};
pub use heisenberg::{
    continuation_defect, fiber_return_spread, p0_derivative_closed_form, p0_periodicity_defect,
    periodic_base_point, rotation_derivative_at_zero, rotation_derivative_closed_form,
    rotation_number, tau, ContinuationDefect, Rotation, P0,
};
pub use pipelines::run_experiment;
pub use report::{fmt_f64, write_table_csv, Bound, Check, Outcome, Report, Table, SCHEMA};

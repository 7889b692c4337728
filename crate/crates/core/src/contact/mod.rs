//! Contact-form diagnostics and the su-quadrilateral gap.

mod gap;
mod invariants;

pub use gap::{su_gap, su_gap_sweep, SuGap, GAP_PARAM, MAX_GAP_EPS};
pub use invariants::{
    check_hrho, check_reeb_center, contact_density, contact_report, pullback_ratio,
    pullback_ratio_iterate, reeb_field, transversal_nondegeneracy, ContactReport, Disk,
    RatioSamples, DEGENERATE_H,
};

//! Map registry, orbit bookkeeping, periodic orbits and continuation.

mod builtins;
mod continuation;
mod orbit;
mod periodic;
mod spec;

pub use builtins::{
    builtin, cat3, heisenberg_f, heisenberg_h, heisenberg_l, identity, skew, BUILTIN_NAMES,
    DEFAULT_EPS, DEFAULT_SKEW,
};
pub use continuation::{continue_periodic_orbit, periodic_point_derivative, ContinuationPoint};
pub use orbit::{backward_step, pull_near, push_near, Orbit};
pub use periodic::{find_periodic_orbits, orbit_from_point, PeriodicOrbit};
pub use spec::MapSpec;

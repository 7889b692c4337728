//! Numerical laboratory for partially hyperbolic diffeomorphisms of 3-manifolds.

pub mod calculus;
pub mod cocycles;
pub mod contact;
pub mod error;
pub mod geometry;
pub mod lab;
pub mod maps;
pub mod normalform;
pub mod rng;
pub mod splitting;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

use std::collections::BTreeMap;

use super::MapSpec;
use crate::geometry::{Manifold, OneForm};
use crate::{Error, Result};

pub const DEFAULT_EPS: f64 = 0.01;
pub const DEFAULT_SKEW: f64 = 0.05;

pub const BUILTIN_NAMES: [&str; 6] = ["cat3", "L", "H", "F", "skew", "identity"];

// shear pieces shared by H and F
const U: &str = "eps*sin(2*pi*x)";
const BIG_U: &str = "eps*x*sin(2*pi*x) + eps/(2*pi)*(cos(2*pi*x) - 1)";

fn one(name: &str, v: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([(name.to_string(), v)])
}

/// `A ⊕ id` on T³ with `A = [[2,1],[1,1]]`.
pub fn cat3() -> MapSpec {
    MapSpec::from_strings(
        "cat3",
        Manifold::Torus3,
        ["2*x + y", "x + y", "z"],
        Some(["x - y", "2*y - x", "z"]),
        BTreeMap::new(),
    )
    .expect("builtin parses")
    .with_volume_preserving(true)
}

pub fn identity(manifold: Manifold) -> MapSpec {
    MapSpec::from_strings(
        "identity",
        manifold,
        ["x", "y", "z"],
        Some(["x", "y", "z"]),
        BTreeMap::new(),
    )
    .expect("builtin parses")
    .with_volume_preserving(true)
}

/// Heisenberg automorphism covering `A`.
pub fn heisenberg_l() -> MapSpec {
    MapSpec::from_strings(
        "L",
        Manifold::Heisenberg,
        ["2*x + y", "x + y", "z + x^2 + x*y + y^2/2"],
        Some([
            "x - y",
            "2*y - x",
            "z - ((x - y)^2 + (x - y)*(2*y - x) + (2*y - x)^2/2)",
        ]),
        BTreeMap::new(),
    )
    .expect("builtin parses")
    .with_volume_preserving(true)
    .with_contact_form(OneForm::heisenberg_contact())
}

/// Contact shear `(x, y + u(x), z + U(x))`.
pub fn heisenberg_h(eps: f64) -> MapSpec {
    let y = format!("y + {U}");
    let z = format!("z + {BIG_U}");
    let yi = format!("y - {U}");
    let zi = format!("z - ({BIG_U})");
    MapSpec::from_strings(
        "H",
        Manifold::Heisenberg,
        ["x", &y, &z],
        Some(["x", &yi, &zi]),
        one("eps", eps),
    )
    .expect("builtin parses")
    .with_volume_preserving(true)
    .with_contact_form(OneForm::heisenberg_contact())
}

/// `L ∘ H_ε`.
pub fn heisenberg_f(eps: f64) -> MapSpec {
    let yu = format!("(y + {U})");
    let x = format!("2*x + {yu}");
    let y = format!("x + {yu}");
    let z = format!("z + {BIG_U} + x^2 + x*{yu} + {yu}^2/2");
    // H⁻¹ after L⁻¹, with a = x - y, b = 2y - x
    let (a, b) = ("(x - y)", "(2*y - x)");
    let ua = format!("eps*sin(2*pi*{a})");
    let big_ua = format!("eps*{a}*sin(2*pi*{a}) + eps/(2*pi)*(cos(2*pi*{a}) - 1)");
    let yi = format!("{b} - {ua}");
    let zi = format!("z - ({a}^2 + {a}*{b} + {b}^2/2) - ({big_ua})");
    MapSpec::from_strings(
        "F",
        Manifold::Heisenberg,
        [&x, &y, &z],
        Some([a, &yi, &zi]),
        one("eps", eps),
    )
    .expect("builtin parses")
    .with_volume_preserving(true)
    .with_contact_form(OneForm::heisenberg_contact())
}

/// Skew product over `A` on T³; `c = 0` is the product `cat3`.
pub fn skew(c: f64) -> MapSpec {
    MapSpec::from_strings(
        "skew",
        Manifold::Torus3,
        ["2*x + y", "x + y", "z + c*sin(2*pi*(x + 2*y))"],
        Some([
            "x - y",
            "2*y - x",
            "z - c*sin(2*pi*((x - y) + 2*(2*y - x)))",
        ]),
        one("c", c),
    )
    .expect("builtin parses")
    .with_volume_preserving(true)
}

/// Look up a built-in by reserved name with default parameters.
pub fn builtin(name: &str) -> Result<MapSpec> {
    match name {
        "cat3" => Ok(cat3()),
        "L" => Ok(heisenberg_l()),
        "H" => Ok(heisenberg_h(DEFAULT_EPS)),
        "F" => Ok(heisenberg_f(DEFAULT_EPS)),
        "skew" => Ok(skew(DEFAULT_SKEW)),
        "identity" => Ok(identity(Manifold::Torus3)),
        other => Err(Error::UnknownIdentifier(other.to_string())),
    }
}

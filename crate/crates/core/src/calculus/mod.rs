//! Truncated jets and the expression language evaluated over them.

mod expr;
mod jet1d;
mod jet2;
mod jet2map;
mod scalar;

pub use expr::{parse_expr, parse_expr_with, Compiled, Expr, Func};
pub use jet1d::Jet1D;
pub use jet2::Jet2;
pub use jet2map::Jet2Map3;
pub use scalar::{Dual, Scalar};

/// Second-order jet of `ast` at `point` with named parameter values.
pub fn eval_jet2(
    ast: &Expr,
    point: [f64; 3],
    params: &std::collections::BTreeMap<String, f64>,
) -> crate::Result<Jet2> {
    let vars = [
        Jet2::variable(point[0], 0),
        Jet2::variable(point[1], 1),
        Jet2::variable(point[2], 2),
    ];
    ast.eval_at(&vars, params)
}

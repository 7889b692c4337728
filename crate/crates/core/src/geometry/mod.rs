//! Quotient manifolds, deck actions and differential forms on the cover.

mod forms;
mod manifold;

pub use forms::{
    exterior_derivative, exterior_derivative2, pullback_oneform, wedge, OneForm, Params, TwoForm,
    VolumeForm,
};
pub use manifold::{quotient_distance, reduce_to_fundamental_domain, Deck, Manifold, Point};

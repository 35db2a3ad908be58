//! Scalars and planar geometry shared by every other module.
//!
//! Two flavors coexist: exact ([`Rat`], [`Dyadic`]) for constructions and oracles,
//! and `f64` for estimators and cone geometry.

mod dyadic;
mod geometry;
mod rat;
mod vec2;

pub use dyadic::{Dyadic, MAX_MATERIALIZED_BITS};
pub use geometry::{cone_distance, in_positive_span, sector_contains, solve_basis, Direction, Sector, COLINEAR_TOL};
pub use rat::Rat;
pub use vec2::{Vec2, Vec2f, Vec2q};

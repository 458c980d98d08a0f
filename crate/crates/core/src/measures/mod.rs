//! Finitely supported measures, couplings and pairwise costs.

mod cost;
mod coupling;
mod measure;
mod point;

pub use cost::{CostKind, CostSpec, CostTerm, MatrixCost};
pub use coupling::{Coupling, MultiCoupling};
pub(crate) use coupling::unravel_axis;
pub use measure::{total_variation, DiscreteMeasure, OUTPUT_MASS_TOL, MASS_TOL, RENORMALIZE_TOL};
pub use point::{Point, PointIndex, PointKey, PointMap};
pub(crate) use point::{check_dim, distance, dot, norm, sub};

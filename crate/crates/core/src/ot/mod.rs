//! Two-marginal Kantorovich duality, the single-potential dual for metric costs,
//! and multimarginal transport with c-convexification.

mod kantorovich;
mod kr;
mod multi;

use serde::Serialize;

use crate::measures::{Point, PointMap};

pub use kantorovich::{
    c_transform, kantorovich_dual, kantorovich_primal, tight_support_report, TightReport,
};
pub use kr::{check_metric, kr_dual, kr_tight_check, KrDual};
pub use multi::{
    multi_c_convexify, multi_c_convexify_seeded, multimarginal_dual, multimarginal_primal,
    normalize_potentials, MultiCost, Normalized, ProductCost, MAX_PRODUCT_ENTRIES,
};

/// Slack allowed in dual feasibility checks.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Kantorovich potentials with `φ(x) − ψ(y) ≤ c(x,y)`.
#[derive(Clone, Debug, Serialize)]
pub struct Potentials {
    pub phi: PointMap<f64>,
    pub psi: PointMap<f64>,
}

/// One potential per marginal with `Σ fᵢ(xᵢ) ≤ c(x₁,…,x_k)`.
#[derive(Clone, Debug, Serialize)]
pub struct MultiPotentials {
    pub f: Vec<PointMap<f64>>,
}

/// Support pairs on which the dual constraint is active.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TightSet {
    pub pairs: Vec<(Point, Point)>,
}

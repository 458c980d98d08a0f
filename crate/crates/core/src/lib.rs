//! Discrete optimal transport, multimarginal transport and martingale optimal
//! transport, with dual certificates for every optimum.

pub mod convex_order;
pub mod error;
pub mod instances;
pub mod lp;
pub mod measures;
pub mod mot;
pub mod ot;

pub use error::{Error, Result};

//! Martingale optimal transport: primal and dual programs, the single-potential
//! dual, certification of the dual function class by gamma fields and sampled
//! simplex inequalities, the extension operator, uniform convexity and
//! smoothness, and the martingale triangle inequality.

mod certify;
mod duality;
mod evaluator;
mod sampling;

pub use certify::{
    bclass_generate, extend, gamma_certify, gamma_certify_on_grid, uniform_convexity_certify,
    uniform_smoothness_certify, CertifyOutcome, ConstraintRef, CounterexamplePoint, Extension,
    CERTIFY_TOL,
};
pub use duality::{mot_dual, mot_dual_symmetric, mot_primal, GammaDual, SymmetricDual};
pub use evaluator::{BAtom, BoxGrid, Domain, FunctionEvaluator, ModulusSpec, NegatedEvaluator};
pub use sampling::{
    mti_check, mti_second_order_check, simplex_inequality_check, simplex_inequality_check_fn,
    SecondOrderOutcome, SimplexOutcome, SimplexWitness, VIOLATION_TOL,
};

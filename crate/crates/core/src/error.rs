use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("points {first} and {second} coincide")]
    DuplicatePoint { first: usize, second: usize },

    #[error("total mass {total} deviates from 1")]
    MassNotOne { total: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate or value: {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("point {0:?} is not on the cost grid")]
    OffGrid(Vec<f64>),

    #[error("no value supplied for point {0:?}")]
    MissingValue(Vec<f64>),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("product support has {entries} entries, limit is {limit}")]
    ProductTooLarge { entries: usize, limit: usize },

    #[error("cost is not a metric on the support ({reason}) at indices {triple:?}")]
    NotAMetric { reason: String, triple: [usize; 3] },

    #[error("input potentials violate the multimarginal constraint by {violation}")]
    InfeasibleInput { violation: f64 },

    #[error("potentials are not a c-convex fixed point (residual {residual})")]
    NotAFixedPoint { residual: f64 },

    #[error("measures are not in convex order")]
    NotInConvexOrder,

    #[error("barycenter mismatch: distance {distance}")]
    BarycenterMismatch { distance: f64 },

    #[error("cost does not vanish on the diagonal (value {value} at support index {index})")]
    NonVanishingDiagonal { index: usize, value: f64 },

    #[error("no gamma supplied for grid point {0:?}")]
    GammaMissing(Vec<f64>),

    #[error("gamma field does not certify the samples at {point:?} (excess {excess})")]
    GammaNotCertifying { point: Vec<f64>, excess: f64 },

    #[error("cost has no growth bound |c(x,y)| <= L|x-y|")]
    MissingGrowthBound,

    #[error("lower bound exceeds g at {point:?} by {excess}")]
    LowerBoundViolation { point: Vec<f64>, excess: f64 },

    #[error("grid too coarse: axis {axis} has {interior} interior points, need 3")]
    GridTooCoarse { axis: usize, interior: usize },

    #[error("invalid input: {0}")]
    Invalid(String),
}

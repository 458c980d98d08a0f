use serde::{Deserialize, Serialize};

use super::point::{check_dim, distance, Point, PointIndex};
use crate::error::{Error, Result};

/// Pairwise cost function `c(x, y)` with optional Lipschitz metadata.
///
/// JSON form: `{"kind": "...", <kind fields>, "lipschitz": L, "growth": Λ}` where the
/// metadata fields are optional. `growth` is a constant with `|c(x,y)| ≤ Λ‖x − y‖`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawCostSpec", into = "RawCostSpec")]
pub struct CostSpec {
    kind: CostKind,
    lipschitz: Option<f64>,
    growth: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostKind {
    /// `c ≡ 0`.
    Zero,
    /// `‖x − y‖`.
    Euclidean,
    /// `‖x − y‖²`.
    SqEuclidean,
    /// `‖x − y‖₁`.
    Manhattan,
    /// `min(‖x − y‖, threshold)`.
    TruncatedEuclidean { threshold: f64 },
    /// `‖x − y‖^exponent`.
    Power { exponent: f64 },
    /// `⟨a, y − x⟩`.
    Linear { a: Vec<f64> },
    /// Tabulated values over a finite grid; off-grid queries are errors.
    Matrix(MatrixCost),
    /// `Σ wᵢ cᵢ(x, y)` with `wᵢ ≥ 0`.
    ConicalCombination { terms: Vec<CostTerm> },
    /// `factor · c(x, y)` for any real factor.
    Scaled { factor: f64, cost: Box<CostSpec> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CostTerm {
    pub weight: f64,
    pub cost: CostSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawMatrixCost", into = "RawMatrixCost")]
pub struct MatrixCost {
    grid: Vec<Point>,
    values: Vec<Vec<f64>>,
    index: PointIndex,
}

#[derive(Serialize, Deserialize)]
struct RawMatrixCost {
    grid: Vec<Point>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<RawMatrixCost> for MatrixCost {
    type Error = Error;

    fn try_from(raw: RawMatrixCost) -> Result<Self> {
        MatrixCost::new(raw.grid, raw.values)
    }
}

impl From<MatrixCost> for RawMatrixCost {
    fn from(m: MatrixCost) -> Self {
        RawMatrixCost {
            grid: m.grid,
            values: m.values,
        }
    }
}

impl MatrixCost {
    /// `values[i][j]` is the cost from `grid[i]` to `grid[j]`.
    pub fn new(grid: Vec<Point>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = grid.len();
        if n == 0 {
            return Err(Error::Empty("matrix cost grid".into()));
        }
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid(format!("matrix cost values must be {n}x{n}")));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix cost value".into()));
        }
        let dim = grid[0].dim();
        for p in &grid {
            check_dim(dim, p.dim())?;
        }
        let index = PointIndex::build(&grid)
            .map_err(|(first, second)| Error::DuplicatePoint { first, second })?;
        Ok(MatrixCost {
            grid,
            values,
            index,
        })
    }

    pub fn grid(&self) -> &[Point] {
        &self.grid
    }

    fn lookup(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let i = self.index.get(x).ok_or_else(|| Error::OffGrid(x.to_vec()))?;
        let j = self.index.get(y).ok_or_else(|| Error::OffGrid(y.to_vec()))?;
        Ok(self.values[i][j])
    }
}

#[derive(Serialize, Deserialize)]
struct RawCostSpec {
    #[serde(flatten)]
    kind: CostKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    growth: Option<f64>,
}

impl TryFrom<RawCostSpec> for CostSpec {
    type Error = Error;

    fn try_from(raw: RawCostSpec) -> Result<Self> {
        CostSpec::new(raw.kind)?.with_metadata(raw.lipschitz, raw.growth)
    }
}

impl From<CostSpec> for RawCostSpec {
    fn from(c: CostSpec) -> Self {
        RawCostSpec {
            kind: c.kind,
            lipschitz: c.lipschitz,
            growth: c.growth,
        }
    }
}

impl CostSpec {
    pub fn new(kind: CostKind) -> Result<Self> {
        match &kind {
            CostKind::TruncatedEuclidean { threshold } if !(*threshold > 0.0) => {
                return Err(Error::Invalid("truncation threshold must be positive".into()))
            }
            CostKind::Power { exponent } if !(*exponent > 0.0) => {
                return Err(Error::Invalid("power exponent must be positive".into()))
            }
            CostKind::Linear { a } if a.iter().any(|v| !v.is_finite()) || a.is_empty() => {
                return Err(Error::Invalid("linear cost needs a finite nonempty vector".into()))
            }
            CostKind::ConicalCombination { terms } => {
                if terms.is_empty() {
                    return Err(Error::Empty("conical combination".into()));
                }
                if let Some(t) = terms.iter().find(|t| !(t.weight >= 0.0) || !t.weight.is_finite()) {
                    return Err(Error::Invalid(format!(
                        "conical weight {} must be nonnegative",
                        t.weight
                    )));
                }
            }
            CostKind::Scaled { factor, .. } if !factor.is_finite() => {
                return Err(Error::NonFinite("scale factor".into()))
            }
            _ => {}
        }
        Ok(CostSpec {
            kind,
            lipschitz: None,
            growth: None,
        })
    }

    pub fn with_metadata(mut self, lipschitz: Option<f64>, growth: Option<f64>) -> Result<Self> {
        for v in lipschitz.iter().chain(growth.iter()) {
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("metadata constant {v} must be >= 0")));
            }
        }
        self.lipschitz = lipschitz;
        self.growth = growth;
        Ok(self)
    }

    pub fn zero() -> Self {
        Self::builtin(CostKind::Zero)
    }

    pub fn euclidean() -> Self {
        Self::builtin(CostKind::Euclidean)
    }

    pub fn sq_euclidean() -> Self {
        Self::builtin(CostKind::SqEuclidean)
    }

    pub fn manhattan() -> Self {
        Self::builtin(CostKind::Manhattan)
    }

    pub fn truncated_euclidean(threshold: f64) -> Result<Self> {
        Self::new(CostKind::TruncatedEuclidean { threshold })
    }

    pub fn power(exponent: f64) -> Result<Self> {
        Self::new(CostKind::Power { exponent })
    }

    pub fn linear(a: Vec<f64>) -> Result<Self> {
        Self::new(CostKind::Linear { a })
    }

    pub fn matrix(grid: Vec<Point>, values: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(CostKind::Matrix(MatrixCost::new(grid, values)?))
    }

    pub fn conical(terms: Vec<(f64, CostSpec)>) -> Result<Self> {
        Self::new(CostKind::ConicalCombination {
            terms: terms
                .into_iter()
                .map(|(weight, cost)| CostTerm { weight, cost })
                .collect(),
        })
    }

    pub fn scaled(factor: f64, cost: CostSpec) -> Result<Self> {
        Self::new(CostKind::Scaled {
            factor,
            cost: Box::new(cost),
        })
    }

    fn builtin(kind: CostKind) -> Self {
        CostSpec {
            kind,
            lipschitz: None,
            growth: None,
        }
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    /// `c(x, y)`.
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(x.len(), y.len())?;
        Ok(match &self.kind {
            CostKind::Zero => 0.0,
            CostKind::Euclidean => distance(x, y),
            CostKind::SqEuclidean => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum(),
            CostKind::Manhattan => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
            CostKind::TruncatedEuclidean { threshold } => distance(x, y).min(*threshold),
            CostKind::Power { exponent } => distance(x, y).powf(*exponent),
            CostKind::Linear { a } => {
                check_dim(a.len(), x.len())?;
                a.iter()
                    .zip(x.iter().zip(y))
                    .map(|(ai, (xi, yi))| ai * (yi - xi))
                    .sum()
            }
            CostKind::Matrix(m) => m.lookup(x, y)?,
            CostKind::ConicalCombination { terms } => {
                let mut total = 0.0;
                for t in terms {
                    total += t.weight * t.cost.evaluate(x, y)?;
                }
                total
            }
            CostKind::Scaled { factor, cost } => factor * cost.evaluate(x, y)?,
        })
    }

    /// Constant `Λ` with `|c(x,y)| ≤ Λ‖x − y‖` in dimension `dim`: the declared
    /// metadata if present, otherwise the closed-form value for kinds that have one.
    pub fn growth_bound(&self, dim: usize) -> Option<f64> {
        if self.growth.is_some() {
            return self.growth;
        }
        match &self.kind {
            CostKind::Zero => Some(0.0),
            CostKind::Euclidean | CostKind::TruncatedEuclidean { .. } => Some(1.0),
            CostKind::Manhattan => Some((dim as f64).sqrt()),
            CostKind::Power { exponent } if *exponent == 1.0 => Some(1.0),
            CostKind::Linear { a } => Some(a.iter().map(|v| v * v).sum::<f64>().sqrt()),
            CostKind::ConicalCombination { terms } => terms
                .iter()
                .map(|t| t.cost.growth_bound(dim).map(|g| t.weight * g))
                .sum(),
            CostKind::Scaled { factor, cost } => cost.growth_bound(dim).map(|g| factor.abs() * g),
            _ => None,
        }
    }

    /// Cost matrix over two supports, row-major.
    pub fn table(&self, left: &[Point], right: &[Point]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(left.len() * right.len());
        for x in left {
            for y in right {
                out.push(self.evaluate(x, y)?);
            }
        }
        Ok(out)
    }
}

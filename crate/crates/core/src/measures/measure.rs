use serde::{Deserialize, Serialize};

use super::point::{check_dim, Point, PointIndex, PointMap};
use crate::error::{Error, Result};

/// Construction tolerance on total mass.
pub const MASS_TOL: f64 = 1e-12;
/// Largest deviation from unit mass that is silently renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-9;
/// Tolerance for objects derived from LP output.
pub const OUTPUT_MASS_TOL: f64 = 1e-10;

/// Finitely supported probability measure on R^n.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<Point>,
    weights: Vec<f64>,
    index: PointIndex,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    dim: usize,
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        DiscreteMeasure::new(raw.dim, raw.points, raw.weights)
    }
}

impl From<DiscreteMeasure> for RawMeasure {
    fn from(m: DiscreteMeasure) -> Self {
        RawMeasure {
            dim: m.dim,
            points: m.points,
            weights: m.weights,
        }
    }
}

impl DiscreteMeasure {
    /// Validates and builds a measure.
    ///
    /// Weights whose total is within `1e-9` of one are rescaled to sum to one;
    /// larger deviations are rejected.
    pub fn new(dim: usize, points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::Invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.is_empty() {
            return Err(Error::Empty("measure has no atoms".into()));
        }
        for p in &points {
            check_dim(dim, p.dim())?;
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite(format!("point {p:?}")));
            }
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite(format!("weight {value}")));
            }
            if value < 0.0 {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        let index = PointIndex::build(&points)
            .map_err(|(first, second)| Error::DuplicatePoint { first, second })?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::MassNotOne { total });
        }
        let weights = if total == 1.0 {
            weights
        } else {
            weights.into_iter().map(|w| w / total).collect()
        };
        Ok(DiscreteMeasure {
            dim,
            points,
            weights,
            index,
        })
    }

    pub fn dirac(point: Point) -> Self {
        let dim = point.dim();
        DiscreteMeasure::new(dim, vec![point], vec![1.0]).expect("a single finite point is valid")
    }

    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        let dim = points.first().map(Point::dim).unwrap_or(0);
        DiscreteMeasure::new(dim, points, vec![1.0 / n as f64; n])
    }

    /// One-dimensional convenience constructor.
    pub fn on_line(xs: &[f64], weights: &[f64]) -> Result<Self> {
        let points = xs.iter().map(|&x| Point::scalar(x)).collect();
        DiscreteMeasure::new(1, points, weights.to_vec())
    }

    /// Sums weights of repeated points (exact equality) before validating.
    pub fn from_atoms_merged(dim: usize, atoms: Vec<(Point, f64)>) -> Result<Self> {
        let mut points: Vec<Point> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut seen = std::collections::HashMap::new();
        for (p, w) in atoms {
            match seen.get(&p.key()) {
                Some(&i) => weights[i] += w,
                None => {
                    seen.insert(p.key(), points.len());
                    points.push(p);
                    weights.push(w);
                }
            }
        }
        DiscreteMeasure::new(dim, points, weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn index_of(&self, p: &[f64]) -> Option<usize> {
        self.index.get(p)
    }

    pub fn weight_of(&self, p: &[f64]) -> f64 {
        self.index_of(p).map_or(0.0, |i| self.weights[i])
    }

    /// Mean of the measure.
    pub fn barycenter(&self) -> Point {
        let mut b = vec![0.0; self.dim];
        for (p, w) in self.atoms() {
            for (bi, pi) in b.iter_mut().zip(p.iter()) {
                *bi += w * pi;
            }
        }
        Point::from_vec_unchecked(b)
    }

    /// `Σ w_i f(x_i)` for a closure.
    pub fn integrate_fn<F: FnMut(&Point) -> f64>(&self, mut f: F) -> f64 {
        self.atoms().map(|(p, w)| w * f(p)).sum()
    }

    /// `Σ w_i values(x_i)`; every support point must carry a value.
    pub fn integrate(&self, values: &PointMap<f64>) -> Result<f64> {
        let mut total = 0.0;
        for (p, w) in self.atoms() {
            total += w * values.try_get(p)?;
        }
        Ok(total)
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        check_dim(self.dim, shift.len())?;
        let points = self
            .points
            .iter()
            .map(|p| Point::new(p.iter().zip(shift).map(|(a, b)| a + b).collect()))
            .collect::<Result<Vec<_>>>()?;
        DiscreteMeasure::new(self.dim, points, self.weights.clone())
    }
}

/// Total variation distance `½ Σ |μ(x) − ν(x)|` between finitely supported measures
/// given as atom lists (repeated points are merged).
pub fn total_variation<'a, I, J>(a: I, b: J) -> f64
where
    I: IntoIterator<Item = (&'a Point, f64)>,
    J: IntoIterator<Item = (&'a Point, f64)>,
{
    let mut diff: std::collections::HashMap<_, f64> = std::collections::HashMap::new();
    for (p, w) in a {
        *diff.entry(p.key()).or_default() += w;
    }
    for (p, w) in b {
        *diff.entry(p.key()).or_default() -= w;
    }
    0.5 * diff.values().map(|d| d.abs()).sum::<f64>()
}

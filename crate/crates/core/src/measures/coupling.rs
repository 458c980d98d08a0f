use serde::Serialize;

use super::measure::{DiscreteMeasure, OUTPUT_MASS_TOL, MASS_TOL};
use super::point::Point;
use crate::error::{Error, Result};

/// Entries of LP output above this negative threshold are treated as round-off and clamped.
const CLAMP_TOL: f64 = 1e-12;

fn clean_mass(mass: Vec<f64>) -> Result<Vec<f64>> {
    mass.into_iter()
        .enumerate()
        .map(|(i, m)| {
            if !m.is_finite() {
                Err(Error::NonFinite(format!("mass entry {i}")))
            } else if m < -CLAMP_TOL {
                Err(Error::NegativeWeight { index: i, value: m })
            } else {
                Ok(m.max(0.0))
            }
        })
        .collect()
}

/// Joint probability mass on the product of two finite supports.
#[derive(Clone, Debug, Serialize)]
pub struct Coupling {
    left: DiscreteMeasure,
    right: DiscreteMeasure,
    /// Row-major, `mass[i * right.len() + j]`.
    mass: Vec<f64>,
    #[serde(skip)]
    consistent: bool,
}

impl Coupling {
    /// Stores `mass` over the supports of `left` and `right` without tying it to their weights.
    pub fn new(left: DiscreteMeasure, right: DiscreteMeasure, mass: Vec<f64>) -> Result<Self> {
        Coupling::checked(left, right, mass, MASS_TOL)
    }

    fn checked(left: DiscreteMeasure, right: DiscreteMeasure, mass: Vec<f64>, tol: f64) -> Result<Self> {
        if mass.len() != left.len() * right.len() {
            return Err(Error::Invalid(format!(
                "mass has {} entries, expected {}",
                mass.len(),
                left.len() * right.len()
            )));
        }
        let mass = clean_mass(mass)?;
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::MassNotOne { total });
        }
        Ok(Coupling {
            left,
            right,
            mass,
            consistent: false,
        })
    }

    /// For masses derived from LP output: total mass and row and column sums are
    /// checked against `OUTPUT_MASS_TOL`, the sums against the weights of `left` and `right`.
    pub fn with_marginals(
        left: DiscreteMeasure,
        right: DiscreteMeasure,
        mass: Vec<f64>,
    ) -> Result<Self> {
        let mut c = Coupling::checked(left, right, mass, OUTPUT_MASS_TOL)?;
        let (rows, cols) = c.sums();
        let dev_rows = rows
            .iter()
            .zip(c.left.weights())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let dev_cols = cols
            .iter()
            .zip(c.right.weights())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if dev_rows > OUTPUT_MASS_TOL || dev_cols > OUTPUT_MASS_TOL {
            return Err(Error::Invalid(format!(
                "coupling marginals deviate by {} (rows) and {} (columns)",
                dev_rows, dev_cols
            )));
        }
        c.consistent = true;
        Ok(c)
    }

    /// Product coupling `μ ⊗ ν`.
    pub fn product(left: &DiscreteMeasure, right: &DiscreteMeasure) -> Self {
        let mass = left
            .weights()
            .iter()
            .flat_map(|a| right.weights().iter().map(move |b| a * b))
            .collect();
        Coupling::with_marginals(left.clone(), right.clone(), mass)
            .expect("product of probability measures is a coupling")
    }

    /// Diagonal coupling of a measure with itself.
    pub fn diagonal(m: &DiscreteMeasure) -> Self {
        let n = m.len();
        let mut mass = vec![0.0; n * n];
        for (i, w) in m.weights().iter().enumerate() {
            mass[i * n + i] = *w;
        }
        Coupling::with_marginals(m.clone(), m.clone(), mass)
            .expect("diagonal of a probability measure is a coupling")
    }

    pub fn left(&self) -> &DiscreteMeasure {
        &self.left
    }

    pub fn right(&self) -> &DiscreteMeasure {
        &self.right
    }

    pub fn is_marginal_consistent(&self) -> bool {
        self.consistent
    }

    pub fn rows(&self) -> usize {
        self.left.len()
    }

    pub fn cols(&self) -> usize {
        self.right.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.right.len() + j]
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.right.len();
        &self.mass[i * n..(i + 1) * n]
    }

    /// Iterates `(left point, right point, mass)` over all entries.
    pub fn entries(&self) -> impl Iterator<Item = (&Point, &Point, f64)> {
        let n = self.right.len();
        self.mass.iter().enumerate().map(move |(k, &m)| {
            (&self.left.points()[k / n], &self.right.points()[k % n], m)
        })
    }

    fn sums(&self) -> (Vec<f64>, Vec<f64>) {
        let (r, c) = (self.rows(), self.cols());
        let mut rows = vec![0.0; r];
        let mut cols = vec![0.0; c];
        for i in 0..r {
            for j in 0..c {
                let m = self.get(i, j);
                rows[i] += m;
                cols[j] += m;
            }
        }
        (rows, cols)
    }

    /// Row-sum and column-sum measures over the stored supports.
    pub fn marginals(&self) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
        let (rows, cols) = self.sums();
        Ok((
            DiscreteMeasure::new(self.left.dim(), self.left.points().to_vec(), rows)?,
            DiscreteMeasure::new(self.right.dim(), self.right.points().to_vec(), cols)?,
        ))
    }

    /// `Σ π(x,y) c(x,y)`.
    pub fn integrate<F: FnMut(&Point, &Point) -> Result<f64>>(&self, mut cost: F) -> Result<f64> {
        let mut total = 0.0;
        for (x, y, m) in self.entries() {
            if m != 0.0 {
                total += m * cost(x, y)?;
            }
        }
        Ok(total)
    }

    /// Per-source barycenter residuals `‖Σ_y π(x,y)(y − x)‖`, indexed like the left support.
    pub fn barycenter_residuals(&self) -> Vec<f64> {
        let dim = self.left.dim();
        (0..self.rows())
            .map(|i| {
                let x = &self.left.points()[i];
                let mut r = vec![0.0; dim];
                for (j, y) in self.right.points().iter().enumerate() {
                    let m = self.get(i, j);
                    for d in 0..dim {
                        r[d] += m * (y[d] - x[d]);
                    }
                }
                r.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect()
    }
}

/// Joint mass on the product of `k` finite supports, stored as a dense tensor
/// in row-major order (last axis fastest).
#[derive(Clone, Debug, Serialize)]
pub struct MultiCoupling {
    supports: Vec<DiscreteMeasure>,
    shape: Vec<usize>,
    mass: Vec<f64>,
    #[serde(skip)]
    consistent: bool,
}

impl MultiCoupling {
    pub fn with_marginals(supports: Vec<DiscreteMeasure>, mass: Vec<f64>) -> Result<Self> {
        let shape: Vec<usize> = supports.iter().map(DiscreteMeasure::len).collect();
        let entries: usize = shape.iter().product();
        if mass.len() != entries {
            return Err(Error::Invalid(format!(
                "tensor has {} entries, expected {}",
                mass.len(),
                entries
            )));
        }
        let mass = clean_mass(mass)?;
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > OUTPUT_MASS_TOL {
            return Err(Error::MassNotOne { total });
        }
        let mut c = MultiCoupling {
            supports,
            shape,
            mass,
            consistent: false,
        };
        for axis in 0..c.shape.len() {
            let m = c.axis_sums(axis);
            let dev = m
                .iter()
                .zip(c.supports[axis].weights())
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            if dev > OUTPUT_MASS_TOL {
                return Err(Error::Invalid(format!(
                    "axis {axis} marginal deviates by {dev}"
                )));
            }
        }
        c.consistent = true;
        Ok(c)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn supports(&self) -> &[DiscreteMeasure] {
        &self.supports
    }

    pub fn is_marginal_consistent(&self) -> bool {
        self.consistent
    }

    fn axis_sums(&self, axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.shape[axis]];
        for (flat, m) in self.mass.iter().enumerate() {
            out[unravel_axis(flat, &self.shape, axis)] += m;
        }
        out
    }

    /// Marginal on axis `axis`.
    pub fn marginal(&self, axis: usize) -> Result<DiscreteMeasure> {
        let s = &self.supports[axis];
        DiscreteMeasure::new(s.dim(), s.points().to_vec(), self.axis_sums(axis))
    }
}

/// Index along `axis` of flat position `flat` in a row-major tensor of `shape`.
pub(crate) fn unravel_axis(flat: usize, shape: &[usize], axis: usize) -> usize {
    let stride: usize = shape[axis + 1..].iter().product();
    (flat / stride) % shape[axis]
}

//! Convex order between finitely supported measures: feasibility of the
//! martingale transport polytope, convex witnesses from Farkas certificates,
//! and decomposition of martingale pairs into extreme fan martingales.

mod fan;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, Bound, Constraint, Feasibility, SolverConfig};
use crate::measures::{check_dim, Coupling, DiscreteMeasure, Point};

pub use fan::{
    choquet_represent, fan_decompose, is_extreme_pair, represent_coupling, representation_cost,
    ExtremeCheck, Fan, FanEntry, FanRepresentation, AFFINE_TOL,
};

/// Mass below which a fiber entry is discarded.
pub const FIBER_DROP_TOL: f64 = 1e-15;

/// `f(z) = ⟨slope, z⟩ + intercept`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: Vec<f64>,
    pub intercept: f64,
}

/// Convex function `max` over affine pieces that separates two measures.
#[derive(Clone, Debug, Serialize)]
pub struct ConvexWitness {
    pub pieces: Vec<AffinePiece>,
    pub mu_integral: f64,
    pub nu_integral: f64,
}

impl AffinePiece {
    pub fn evaluate(&self, z: &[f64]) -> f64 {
        self.intercept + self.slope.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// `max` of the pieces at `z`.
pub fn max_affine(pieces: &[AffinePiece], z: &[f64]) -> f64 {
    pieces
        .iter()
        .map(|p| p.evaluate(z))
        .fold(f64::NEG_INFINITY, f64::max)
}

impl ConvexWitness {
    pub fn evaluate(&self, z: &[f64]) -> f64 {
        max_affine(&self.pieces, z)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderCertificate {
    InOrder(Coupling),
    NotInOrder(ConvexWitness),
}

impl OrderCertificate {
    pub fn is_in_order(&self) -> bool {
        matches!(self, OrderCertificate::InOrder(_))
    }
}

/// Marginal and barycenter rows over `π(x_i, y_j)`, in the order
/// source masses, target masses, then `dim` barycenter rows per source.
pub(crate) fn martingale_constraints(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Vec<Constraint> {
    let (m, n, dim) = (mu.len(), nu.len(), mu.dim());
    let mut rows = Vec::with_capacity(m + n + m * dim);
    for i in 0..m {
        let mut r = vec![0.0; m * n];
        r[i * n..(i + 1) * n].fill(1.0);
        rows.push(Constraint::eq(r, mu.weights()[i]));
    }
    for j in 0..n {
        let mut r = vec![0.0; m * n];
        for i in 0..m {
            r[i * n + j] = 1.0;
        }
        rows.push(Constraint::eq(r, nu.weights()[j]));
    }
    for (i, x) in mu.points().iter().enumerate() {
        for d in 0..dim {
            let mut r = vec![0.0; m * n];
            for (j, y) in nu.points().iter().enumerate() {
                r[i * n + j] = y[d] - x[d];
            }
            rows.push(Constraint::eq(r, 0.0));
        }
    }
    rows
}

fn witness_from_farkas(mu: &DiscreteMeasure, nu: &DiscreteMeasure, w: &[f64]) -> ConvexWitness {
    let (m, n, dim) = (mu.len(), nu.len(), mu.dim());
    let u = &w[..m];
    let v = &w[m..m + n];
    let scale: f64 = u.iter().zip(mu.weights()).map(|(a, b)| a * b).sum::<f64>()
        + v.iter().zip(nu.weights()).map(|(a, b)| a * b).sum::<f64>();
    let pieces = mu
        .points()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let slope: Vec<f64> = w[m + n + i * dim..m + n + (i + 1) * dim]
                .iter()
                .map(|g| g / scale)
                .collect();
            let at_x: f64 = slope.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            AffinePiece {
                intercept: u[i] / scale - at_x,
                slope,
            }
        })
        .collect();
    let mut witness = ConvexWitness {
        pieces,
        mu_integral: 0.0,
        nu_integral: 0.0,
    };
    witness.mu_integral = mu.integrate_fn(|p| witness.evaluate(p));
    witness.nu_integral = nu.integrate_fn(|p| witness.evaluate(p));
    witness
}

/// Decides whether `mu` precedes `nu` in convex order. A yes comes with a
/// martingale coupling, a no with a convex function integrating strictly
/// higher against `mu`.
pub fn convex_order_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<OrderCertificate> {
    check_dim(mu.dim(), nu.dim())?;
    let rows = martingale_constraints(mu, nu);
    let bounds = vec![Bound::NonNegative; mu.len() * nu.len()];
    match lp::check_feasibility(&rows, &bounds, &SolverConfig::default())? {
        Feasibility::Feasible(x) => Ok(OrderCertificate::InOrder(Coupling::with_marginals(
            mu.clone(),
            nu.clone(),
            x,
        )?)),
        Feasibility::Infeasible(w) => Ok(OrderCertificate::NotInOrder(witness_from_farkas(
            mu, nu, &w,
        ))),
    }
}

/// A martingale coupling of `mu` and `nu`.
pub fn strassen_coupling(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Coupling> {
    match convex_order_check(mu, nu)? {
        OrderCertificate::InOrder(c) => Ok(c),
        OrderCertificate::NotInOrder(_) => Err(Error::NotInConvexOrder),
    }
}

/// Conditional law of the target given each source point.
#[derive(Clone, Debug, Serialize)]
pub struct Fiber {
    pub x: Point,
    pub mass: f64,
    pub nu_x: DiscreteMeasure,
}

/// Splits a coupling into `(x, μ(x), π(x,·)/μ(x))`, skipping sources without
/// mass and entries of at most `1e-15`.
pub fn disintegrate(c: &Coupling) -> Result<Vec<Fiber>> {
    let dim = c.right().dim();
    let mut out = Vec::with_capacity(c.rows());
    for (i, x) in c.left().points().iter().enumerate() {
        let atoms: Vec<(Point, f64)> = c
            .row(i)
            .iter()
            .zip(c.right().points())
            .filter(|(m, _)| **m > FIBER_DROP_TOL)
            .map(|(m, y)| (y.clone(), *m))
            .collect();
        let mass: f64 = atoms.iter().map(|(_, m)| m).sum();
        if mass <= FIBER_DROP_TOL {
            continue;
        }
        let (points, weights): (Vec<Point>, Vec<f64>) =
            atoms.into_iter().map(|(p, m)| (p, m / mass)).unzip();
        out.push(Fiber {
            x: x.clone(),
            mass,
            nu_x: DiscreteMeasure::new(dim, points, weights)?,
        });
    }
    Ok(out)
}

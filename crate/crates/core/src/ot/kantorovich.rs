use serde::Serialize;

use super::{Potentials, TightSet};
use crate::error::Result;
use crate::lp::{self, Bound, Constraint, LinearProgram, Sense};
use crate::measures::{check_dim, CostSpec, Coupling, DiscreteMeasure, Point, PointMap};

pub(crate) fn cost_table(
    left: &[Point],
    right: &[Point],
    cost: &CostSpec,
) -> Result<Vec<Vec<f64>>> {
    left.iter()
        .map(|x| right.iter().map(|y| cost.evaluate(x, y)).collect())
        .collect()
}

/// Minimizes `Σ π(x,y) c(x,y)` over couplings of `mu` and `nu`.
pub fn kantorovich_primal(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostSpec,
) -> Result<(Coupling, f64)> {
    check_dim(mu.dim(), nu.dim())?;
    let (m, n) = (mu.len(), nu.len());
    let table = cost_table(mu.points(), nu.points(), cost)?;
    let objective: Vec<f64> = table.iter().flatten().copied().collect();
    let mut prog = LinearProgram::new(Sense::Minimize, objective, Bound::NonNegative);
    for i in 0..m {
        let mut row = vec![0.0; m * n];
        row[i * n..(i + 1) * n].fill(1.0);
        prog.push(Constraint::eq(row, mu.weights()[i]));
    }
    for j in 0..n {
        let mut row = vec![0.0; m * n];
        for i in 0..m {
            row[i * n + j] = 1.0;
        }
        prog.push(Constraint::eq(row, nu.weights()[j]));
    }
    let sol = lp::solve_optimal(&prog, "transport primal")?;
    let coupling = Coupling::with_marginals(mu.clone(), nu.clone(), sol.primal)?;
    let value = coupling.integrate(|x, y| cost.evaluate(x, y))?;
    Ok((coupling, value))
}

/// Maximizes `∫φ dμ − ∫ψ dν` subject to `φ(x) − ψ(y) ≤ c(x,y)` on the product support.
pub fn kantorovich_dual(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostSpec,
) -> Result<(Potentials, f64)> {
    check_dim(mu.dim(), nu.dim())?;
    let (m, n) = (mu.len(), nu.len());
    let table = cost_table(mu.points(), nu.points(), cost)?;
    let mut objective = mu.weights().to_vec();
    objective.extend(nu.weights().iter().map(|w| -w));
    let mut prog = LinearProgram::new(Sense::Maximize, objective, Bound::Free);
    for i in 0..m {
        for j in 0..n {
            let mut row = vec![0.0; m + n];
            row[i] = 1.0;
            row[m + j] = -1.0;
            prog.push(Constraint::le(row, table[i][j]));
        }
    }
    let sol = lp::solve_optimal(&prog, "transport dual")?;
    let phi = PointMap::new(mu.points().to_vec(), sol.primal[..m].to_vec())?;
    let psi = PointMap::new(nu.points().to_vec(), sol.primal[m..].to_vec())?;
    let pots = Potentials { phi, psi };
    let value = dual_objective(&pots, mu, nu)?;
    Ok((pots, value))
}

pub(crate) fn dual_objective(
    pots: &Potentials,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<f64> {
    Ok(mu.integrate(&pots.phi)? - nu.integrate(&pots.psi)?)
}

/// Replaces `ψ` by the double c-transform: `φ′(x) = min_y c(x,y) + ψ(y)`, then
/// `ψ′(y) = max_x φ′(x) − c(x,y)`.
pub fn c_transform(
    psi: &PointMap<f64>,
    cost: &CostSpec,
    left: &[Point],
    right: &[Point],
) -> Result<Potentials> {
    let table = cost_table(left, right, cost)?;
    let psi_vals = right
        .iter()
        .map(|y| psi.try_get(y).copied())
        .collect::<Result<Vec<f64>>>()?;
    let phi: Vec<f64> = table
        .iter()
        .map(|row| {
            row.iter()
                .zip(&psi_vals)
                .map(|(c, p)| c + p)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let psi_new: Vec<f64> = (0..right.len())
        .map(|j| {
            (0..left.len())
                .map(|i| phi[i] - table[i][j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(Potentials {
        phi: PointMap::new(left.to_vec(), phi)?,
        psi: PointMap::new(right.to_vec(), psi_new)?,
    })
}

/// Outcome of [`tight_support_report`].
#[derive(Clone, Debug, Serialize)]
pub struct TightReport {
    pub tight: TightSet,
    /// Coupling mass on pairs with `φ(x) − ψ(y) < c(x,y) − tol`.
    pub off_tight_mass: f64,
    pub passed: bool,
}

/// Collects the pairs where the dual constraint is active within `tol` and
/// checks that the coupling puts at most `tol · total` mass elsewhere.
pub fn tight_support_report(
    pots: &Potentials,
    coupling: &Coupling,
    cost: &CostSpec,
    tol: f64,
) -> Result<TightReport> {
    let mut tight = TightSet::default();
    let mut off = 0.0;
    let mut total = 0.0;
    for (x, y, m) in coupling.entries() {
        let gap = pots.phi.try_get(x)? - pots.psi.try_get(y)? - cost.evaluate(x, y)?;
        total += m;
        if gap >= -tol {
            tight.pairs.push((x.clone(), y.clone()));
        } else {
            off += m;
        }
    }
    Ok(TightReport {
        tight,
        off_tight_mass: off,
        passed: off <= tol * total,
    })
}

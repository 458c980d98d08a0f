use serde::Serialize;

use crate::convex_order::martingale_constraints;
use crate::error::{Error, Result};
use crate::lp::{self, Bound, Constraint, LinearProgram, LpStatus, Sense, SolverConfig};
use crate::measures::{check_dim, CostSpec, Coupling, DiscreteMeasure, Point, PointMap};

/// Diagonal values of the cost above this magnitude are rejected by the symmetric dual.
const DIAGONAL_TOL: f64 = 1e-12;

/// Dual variables of martingale transport:
/// `u(x) − v(y) + ⟨γ(x), y − x⟩ ≤ c(x,y)`.
#[derive(Clone, Debug, Serialize)]
pub struct GammaDual {
    pub u: PointMap<f64>,
    pub v: PointMap<f64>,
    pub gamma: PointMap<Vec<f64>>,
}

impl GammaDual {
    /// `max (u(x) − v(y) + ⟨γ(x), y − x⟩ − c(x,y))` over the supports.
    pub fn max_violation(&self, cost: &CostSpec) -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for ((x, u), g) in self.u.iter().zip(self.gamma.values()) {
            for (y, v) in self.v.iter() {
                let tilt: f64 = g.iter().zip(y.iter().zip(x.iter())).map(|(gi, (yi, xi))| gi * (yi - xi)).sum();
                worst = worst.max(u - v + tilt - cost.evaluate(x, y)?);
            }
        }
        Ok(worst)
    }
}

/// Single potential `f` with gamma field on a common support:
/// `f(x) − f(y) + ⟨γ(x), y − x⟩ ≤ c(x,y)`.
#[derive(Clone, Debug, Serialize)]
pub struct SymmetricDual {
    pub f: PointMap<f64>,
    pub gamma: PointMap<Vec<f64>>,
    pub value: f64,
}

/// Minimizes `∫c dπ` over martingale couplings of `mu` and `nu`.
pub fn mot_primal(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostSpec,
) -> Result<(Coupling, f64)> {
    check_dim(mu.dim(), nu.dim())?;
    let objective = cost.table(mu.points(), nu.points())?;
    let mut prog = LinearProgram::new(Sense::Minimize, objective, Bound::NonNegative);
    prog.constraints = martingale_constraints(mu, nu);
    let sol = lp::solve(&prog, &SolverConfig::default())?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::NotInConvexOrder),
        LpStatus::Unbounded => {
            return Err(Error::NumericalBreakdown("bounded program reported unbounded".into()))
        }
    }
    let coupling = Coupling::with_marginals(mu.clone(), nu.clone(), sol.primal)?;
    let value = coupling.integrate(|x, y| cost.evaluate(x, y))?;
    Ok((coupling, value))
}

fn dual_status(sol: &lp::LpSolution, what: &str) -> Result<()> {
    match sol.status {
        LpStatus::Optimal => Ok(()),
        LpStatus::Unbounded => Err(Error::NotInConvexOrder),
        LpStatus::Infeasible => Err(Error::NumericalBreakdown(format!(
            "{what}: zero potentials are feasible but the solver reported infeasible"
        ))),
    }
}

/// Maximizes `∫u dμ − ∫v dν` over [`GammaDual`] variables. An unbounded dual
/// means the pair is not in convex order.
pub fn mot_dual(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostSpec,
) -> Result<(GammaDual, f64)> {
    check_dim(mu.dim(), nu.dim())?;
    let (m, n, dim) = (mu.len(), nu.len(), mu.dim());
    let vars = m + n + m * dim;
    let mut objective = vec![0.0; vars];
    objective[..m].copy_from_slice(mu.weights());
    for (o, w) in objective[m..m + n].iter_mut().zip(nu.weights()) {
        *o = -w;
    }
    let mut prog = LinearProgram::new(Sense::Maximize, objective, Bound::Free);
    for (i, x) in mu.points().iter().enumerate() {
        for (j, y) in nu.points().iter().enumerate() {
            let mut row = vec![0.0; vars];
            row[i] = 1.0;
            row[m + j] = -1.0;
            for d in 0..dim {
                row[m + n + i * dim + d] = y[d] - x[d];
            }
            prog.push(Constraint::le(row, cost.evaluate(x, y)?));
        }
    }
    let sol = lp::solve(&prog, &SolverConfig::default())?;
    dual_status(&sol, "martingale dual")?;
    let x = &sol.primal;
    let dual = GammaDual {
        u: PointMap::new(mu.points().to_vec(), x[..m].to_vec())?,
        v: PointMap::new(nu.points().to_vec(), x[m..m + n].to_vec())?,
        gamma: PointMap::new(
            mu.points().to_vec(),
            (0..m).map(|i| x[m + n + i * dim..m + n + (i + 1) * dim].to_vec()).collect(),
        )?,
    };
    let value = mu.integrate(&dual.u)? - nu.integrate(&dual.v)?;
    Ok((dual, value))
}

/// Maximizes `∫f d(μ − ν)` over a single potential on `supp μ ∪ supp ν ∪ extra`
/// with a gamma field on the same set.
pub fn mot_dual_symmetric(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostSpec,
    extra: &[Point],
) -> Result<SymmetricDual> {
    check_dim(mu.dim(), nu.dim())?;
    let dim = mu.dim();
    let mut pts: Vec<Point> = mu.points().to_vec();
    for p in nu.points().iter().chain(extra) {
        check_dim(dim, p.dim())?;
        if !pts.iter().any(|q| q.coords() == p.coords()) {
            pts.push(p.clone());
        }
    }
    for (index, p) in pts.iter().enumerate() {
        let value = cost.evaluate(p, p)?;
        if value.abs() > DIAGONAL_TOL {
            return Err(Error::NonVanishingDiagonal { index, value });
        }
    }
    let k = pts.len();
    let vars = k + k * dim;
    let mut objective = vec![0.0; vars];
    for (o, p) in objective.iter_mut().zip(&pts) {
        *o = mu.weight_of(p) - nu.weight_of(p);
    }
    let mut prog = LinearProgram::new(Sense::Maximize, objective, Bound::Free);
    for (i, x) in pts.iter().enumerate() {
        for (j, y) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut row = vec![0.0; vars];
            row[i] = 1.0;
            row[j] = -1.0;
            for d in 0..dim {
                row[k + i * dim + d] = y[d] - x[d];
            }
            prog.push(Constraint::le(row, cost.evaluate(x, y)?));
        }
    }
    let sol = lp::solve(&prog, &SolverConfig::default())?;
    dual_status(&sol, "symmetric martingale dual")?;
    let x = &sol.primal;
    let f = PointMap::new(pts.clone(), x[..k].to_vec())?;
    let gamma = PointMap::new(
        pts,
        (0..k).map(|i| x[k + i * dim..k + (i + 1) * dim].to_vec()).collect(),
    )?;
    let value = mu.integrate(&f)? - nu.integrate(&f)?;
    Ok(SymmetricDual { f, gamma, value })
}

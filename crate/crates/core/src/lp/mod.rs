//! Dense linear programming: a two-phase simplex method with Bland's rule.
//!
//! Every solve returns dual multipliers (one per constraint) and, for
//! infeasible systems, a Farkas certificate. Solvers elsewhere in the crate
//! turn these into transport potentials, gamma fields and convex witnesses.

mod simplex;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// Lower bound of a variable; every upper bound is `+∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Bound {
    NonNegative,
    Free,
}

#[derive(Clone, Debug, Serialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Constraint {
            coeffs,
            relation,
            rhs,
        }
    }

    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Le, rhs)
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Eq, rhs)
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Ge, rhs)
    }

    fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub sense: Sense,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bound>,
}

impl LinearProgram {
    /// Program over `n` variables with the given bound for each.
    pub fn new(sense: Sense, objective: Vec<f64>, bound: Bound) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            sense,
            constraints: Vec::new(),
            bounds: vec![bound; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.bounds.len() != n {
            return Err(Error::Invalid(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                n
            )));
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("objective coefficient".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::Invalid(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("constraint {i}")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Largest constraint or bound violation of `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .filter(|(b, _)| **b == Bound::NonNegative)
            .map(|(_, v)| (-v).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Reduced costs `c_j − Σ_i y_i a_ij`.
    pub fn reduced_costs(&self, dual: &[f64]) -> Vec<f64> {
        let mut r = self.objective.clone();
        for (c, y) in self.constraints.iter().zip(dual) {
            for (rj, a) in r.iter_mut().zip(&c.coeffs) {
                *rj -= y * a;
            }
        }
        r
    }
}

/// Tolerances shared by every solver in the crate.
#[derive(Clone, Debug, Serialize)]
pub struct SolverConfig {
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    /// Phase-one objective above which a system is declared infeasible.
    pub feas_tol: f64,
    /// Reduced-cost threshold for entering columns.
    pub opt_tol: f64,
    pub max_iterations: usize,
    /// Dump tableaus to stderr.
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            pivot_tol: 1e-11,
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            max_iterations: 1_000_000,
            verbose: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve`].
///
/// Dual multipliers follow the sensitivity convention `value = Σ_i dual_i · rhs_i`:
/// for a minimization `≤` rows carry `dual ≤ 0` and `≥` rows `dual ≥ 0`, and the
/// signs flip for a maximization. The Farkas vector `w` of an infeasible system
/// satisfies `Σ_i w_i rhs_i > 0`, `(wᵀA)_j ≤ 0` on nonnegative variables,
/// `(wᵀA)_j = 0` on free ones, `w_i ≤ 0` on `≤` rows and `w_i ≥ 0` on `≥` rows.
#[derive(Clone, Debug, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub farkas: Option<Vec<f64>>,
    pub iterations: usize,
}

/// Optimality residuals of a solution against its program.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub complementarity: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.complementarity)
    }
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Primal and dual feasibility, duality gap and complementary slackness.
    pub fn residuals(&self, lp: &LinearProgram) -> Residuals {
        let x = &self.primal;
        let y = &self.dual;
        let primal = lp.primal_residual(x);
        let sign = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let r = lp.reduced_costs(y);
        let mut dual: f64 = 0.0;
        let mut comp: f64 = 0.0;
        for ((rj, b), xj) in r.iter().zip(&lp.bounds).zip(x) {
            match b {
                Bound::NonNegative => dual = dual.max((-sign * rj).max(0.0)),
                Bound::Free => dual = dual.max(rj.abs()),
            }
            comp = comp.max((rj * xj).abs());
        }
        for (c, yi) in lp.constraints.iter().zip(y) {
            let wrong_sign = match c.relation {
                Relation::Le => (sign * yi).max(0.0),
                Relation::Ge => (-sign * yi).max(0.0),
                Relation::Eq => 0.0,
            };
            dual = dual.max(wrong_sign);
            comp = comp.max((yi * (c.activity(x) - c.rhs)).abs());
        }
        let dual_value: f64 = lp.constraints.iter().zip(y).map(|(c, yi)| c.rhs * yi).sum();
        Residuals {
            primal,
            dual,
            gap: (lp.objective_value(x) - dual_value).abs(),
            complementarity: comp,
        }
    }
}

/// Solves a linear program.
pub fn solve(lp: &LinearProgram, config: &SolverConfig) -> Result<LpSolution> {
    lp.validate()?;
    simplex::solve(lp, config)
}

/// Solves a program that is feasible and bounded by construction; any other
/// status means the arithmetic broke down.
pub(crate) fn solve_optimal(lp: &LinearProgram, what: &str) -> Result<LpSolution> {
    let sol = solve(lp, &SolverConfig::default())?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        status => Err(Error::NumericalBreakdown(format!(
            "{what}: solver reported {status:?}"
        ))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum Feasibility {
    Feasible(Vec<f64>),
    Infeasible(Vec<f64>),
}

/// Phase-one feasibility of `constraints` under `bounds`.
pub fn check_feasibility(
    constraints: &[Constraint],
    bounds: &[Bound],
    config: &SolverConfig,
) -> Result<Feasibility> {
    let lp = LinearProgram {
        objective: vec![0.0; bounds.len()],
        sense: Sense::Minimize,
        constraints: constraints.to_vec(),
        bounds: bounds.to_vec(),
    };
    let sol = solve(&lp, config)?;
    match sol.status {
        LpStatus::Optimal => Ok(Feasibility::Feasible(sol.primal)),
        LpStatus::Infeasible => Ok(Feasibility::Infeasible(
            sol.farkas.expect("infeasible solves carry a certificate"),
        )),
        LpStatus::Unbounded => Err(Error::NumericalBreakdown(
            "zero objective reported unbounded".into(),
        )),
    }
}

/// Checks that `w` proves `constraints` (under `bounds`) have no solution.
pub fn verify_farkas(constraints: &[Constraint], bounds: &[Bound], w: &[f64], tol: f64) -> bool {
    if w.len() != constraints.len() {
        return false;
    }
    let n = bounds.len();
    let mut combo = vec![0.0; n];
    let mut rhs = 0.0;
    for (c, wi) in constraints.iter().zip(w) {
        let sign_ok = match c.relation {
            Relation::Le => *wi <= tol,
            Relation::Ge => *wi >= -tol,
            Relation::Eq => true,
        };
        if !sign_ok {
            return false;
        }
        for (acc, a) in combo.iter_mut().zip(&c.coeffs) {
            *acc += wi * a;
        }
        rhs += wi * c.rhs;
    }
    let scale = 1.0 + w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cols_ok = combo.iter().zip(bounds).all(|(v, b)| match b {
        Bound::NonNegative => *v <= tol * scale,
        Bound::Free => v.abs() <= tol * scale,
    });
    cols_ok && rhs > tol * scale
}

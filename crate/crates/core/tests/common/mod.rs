//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

pub mod oracles;

use choquet::lp::{self, Bound, Constraint, LinearProgram, LpStatus, Sense, SolverConfig};
use rand::Rng;

/// `max cᵀx, Ax ≤ b, x ≥ 0` with entries drawn from small integer-ish ranges.
pub struct RandomLp {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl RandomLp {
    pub fn sample<R: Rng>(rng: &mut R) -> Self {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=6);
        let c = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let a = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-2.0..3.0)).collect())
            .collect();
        let b = (0..m).map(|_| rng.random_range(-1.0..4.0)).collect();
        RandomLp { c, a, b }
    }

    pub fn program(&self) -> LinearProgram {
        let mut p = LinearProgram::new(Sense::Maximize, self.c.clone(), Bound::NonNegative);
        for (row, rhs) in self.a.iter().zip(&self.b) {
            p.push(Constraint::le(row.clone(), *rhs));
        }
        p
    }
}

/// Outcome of comparing the simplex solver with vertex enumeration on one LP.
pub fn check_lp_against_oracle(inst: &RandomLp) -> Result<(), String> {
    let prog = inst.program();
    let sol = lp::solve(&prog, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let oracle = oracles::vertex_enumeration_max(&inst.c, &inst.a, &inst.b, None);
    match sol.status {
        LpStatus::Optimal => {
            let Some(best) = oracle else {
                return Err("solver optimal, oracle found no vertex".into());
            };
            let bounded = oracles::vertex_enumeration_max(&inst.c, &inst.a, &inst.b, Some(1e4));
            if bounded.map_or(true, |v| (v - best).abs() > 1e-7) {
                return Err("oracle says unbounded but solver says optimal".into());
            }
            if (sol.value - best).abs() > 1e-7 * (1.0 + best.abs()) {
                return Err(format!("value {} vs oracle {}", sol.value, best));
            }
            let r = sol.residuals(&prog);
            if r.primal > 1e-8 || r.dual > 1e-8 || r.complementarity > 1e-8 {
                return Err(format!("residuals {r:?}"));
            }
            Ok(())
        }
        LpStatus::Infeasible => {
            if oracle.is_some() {
                return Err("solver infeasible, oracle found a vertex".into());
            }
            let w = sol.farkas.as_ref().ok_or("missing Farkas vector")?;
            if !lp::verify_farkas(&prog.constraints, &prog.bounds, w, 1e-9) {
                return Err("Farkas vector does not verify".into());
            }
            Ok(())
        }
        LpStatus::Unbounded => {
            let small = oracles::vertex_enumeration_max(&inst.c, &inst.a, &inst.b, Some(1e3));
            let large = oracles::vertex_enumeration_max(&inst.c, &inst.a, &inst.b, Some(1e4));
            match (small, large) {
                (Some(s), Some(l)) if l > s + 1.0 => Ok(()),
                _ => Err("solver unbounded, oracle bounded".into()),
            }
        }
    }
}

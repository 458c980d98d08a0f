use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{self, Bound, Constraint, LinearProgram, Sense};
use crate::measures::{check_dim, CostSpec, Coupling, DiscreteMeasure, Point, PointMap};

/// Relative slack used when verifying the metric axioms.
const METRIC_TOL: f64 = 1e-12;

/// Single 1-Lipschitz potential on the union of supports.
#[derive(Clone, Debug, Serialize)]
pub struct KrDual {
    pub f: PointMap<f64>,
    pub value: f64,
}

fn union_support(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Vec<Point> {
    let mut pts = mu.points().to_vec();
    pts.extend(nu.points().iter().filter(|p| mu.index_of(p).is_none()).cloned());
    pts
}

/// Checks symmetry, vanishing diagonal, nonnegativity and the triangle
/// inequality over all triples of `points`.
pub fn check_metric(points: &[Point], cost: &CostSpec) -> Result<()> {
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            d[i][j] = cost.evaluate(&points[i], &points[j])?;
        }
    }
    let scale = d.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = METRIC_TOL * scale;
    let fail = |reason: &str, triple| {
        Err(Error::NotAMetric {
            reason: reason.into(),
            triple,
        })
    };
    for i in 0..n {
        if d[i][i].abs() > tol {
            return fail("nonzero diagonal", [i, i, i]);
        }
        for j in 0..n {
            if d[i][j] < -tol {
                return fail("negative distance", [i, j, j]);
            }
            if (d[i][j] - d[j][i]).abs() > tol {
                return fail("asymmetric", [i, j, j]);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if d[i][k] > d[i][j] + d[j][k] + tol {
                    return fail("triangle inequality", [i, j, k]);
                }
            }
        }
    }
    Ok(())
}

/// Maximizes `∫f d(μ−ν)` over `f` with `f(x) − f(y) ≤ d(x,y)` on the union of supports.
pub fn kr_dual(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: &CostSpec) -> Result<KrDual> {
    check_dim(mu.dim(), nu.dim())?;
    let pts = union_support(mu, nu);
    check_metric(&pts, metric)?;
    let n = pts.len();
    let objective = pts
        .iter()
        .map(|p| mu.weight_of(p) - nu.weight_of(p))
        .collect();
    let mut prog = LinearProgram::new(Sense::Maximize, objective, Bound::Free);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut row = vec![0.0; n];
                row[i] = 1.0;
                row[j] = -1.0;
                prog.push(Constraint::le(row, metric.evaluate(&pts[i], &pts[j])?));
            }
        }
    }
    let sol = lp::solve_optimal(&prog, "single-potential dual")?;
    let f = PointMap::new(pts, sol.primal)?;
    let value = mu.integrate(&f)? - nu.integrate(&f)?;
    Ok(KrDual { f, value })
}

/// True when coupling mass outside `tol · total` sits on pairs with
/// `f(x) − f(y) ≥ d(x,y) − tol`, where `x ∼ μ` and `y ∼ ν`.
pub fn kr_tight_check(
    f: &PointMap<f64>,
    coupling: &Coupling,
    metric: &CostSpec,
    tol: f64,
) -> Result<bool> {
    let mut off = 0.0;
    let mut total = 0.0;
    for (x, y, m) in coupling.entries() {
        total += m;
        let gap = metric.evaluate(x, y)? - (f.try_get(x)? - f.try_get(y)?);
        if gap.abs() > tol {
            off += m;
        }
    }
    Ok(off <= tol * total)
}

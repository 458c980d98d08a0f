use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use super::evaluator::{BoxGrid, Domain, FunctionEvaluator};
use crate::error::{Error, Result};
use crate::measures::{CostSpec, Point};

/// Excess above which a sampled inequality counts as violated.
pub const VIOLATION_TOL: f64 = 1e-8;
/// Draws per sample before a finite-domain simplex is given up.
const MAX_ATTEMPTS: usize = 1000;

/// Sampled tuple on which an inequality fails.
#[derive(Clone, Debug, Serialize)]
pub struct SimplexWitness {
    pub base: Option<Point>,
    pub atoms: Vec<Point>,
    pub lambdas: Vec<f64>,
    pub violation: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SimplexOutcome {
    Passed {
        samples: usize,
        /// Samples abandoned because no simplex around a domain point was found.
        skipped: usize,
        /// Largest `LHS − RHS` seen (nonpositive up to the tolerance).
        max_excess: f64,
        /// Largest `|LHS − RHS|` seen.
        max_abs_gap: f64,
    },
    Violated {
        sample: usize,
        witness: SimplexWitness,
    },
}

impl SimplexOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, SimplexOutcome::Passed { .. })
    }

    pub fn witness(&self) -> Option<&SimplexWitness> {
        match self {
            SimplexOutcome::Violated { witness, .. } => Some(witness),
            SimplexOutcome::Passed { .. } => None,
        }
    }
}

struct Sample {
    base: Option<Point>,
    atoms: Vec<Point>,
    lambdas: Vec<f64>,
    barycenter: Point,
}

fn uniform_in_box(rng: &mut ChaCha8Rng, lower: &[f64], upper: &[f64]) -> Point {
    let c = lower
        .iter()
        .zip(upper)
        .map(|(l, u)| if l < u { rng.random_range(*l..*u) } else { *l })
        .collect();
    Point::new(c).expect("finite box")
}

/// Barycentric coordinates of `target` with respect to `atoms`, if it lies in
/// their (nondegenerate) hull.
fn barycentric(atoms: &[&Point], target: &Point) -> Option<Vec<f64>> {
    let k = atoms.len();
    let dim = target.dim();
    let a = DMatrix::from_fn(dim + 1, k, |r, c| if r < dim { atoms[c][r] } else { 1.0 });
    let mut rhs: Vec<f64> = target.to_vec();
    rhs.push(1.0);
    let lam = a.lu().solve(&DVector::from_vec(rhs))?;
    if lam.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return None;
    }
    Some(lam.iter().copied().collect())
}

fn draw(domain: &Domain, with_base: bool, seed: u64, index: usize) -> Option<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index as u64);
    let dim = domain.dim();
    match domain {
        Domain::Box { lower, upper } => {
            let atoms: Vec<Point> = (0..=dim).map(|_| uniform_in_box(&mut rng, lower, upper)).collect();
            let e: Vec<f64> = (0..=dim).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = e.iter().sum();
            let lambdas: Vec<f64> = e.iter().map(|v| v / total).collect();
            let mut b = vec![0.0; dim];
            for (a, l) in atoms.iter().zip(&lambdas) {
                for (bi, ai) in b.iter_mut().zip(a.iter()) {
                    *bi += l * ai;
                }
            }
            let base = with_base.then(|| uniform_in_box(&mut rng, lower, upper));
            Some(Sample {
                base,
                atoms,
                lambdas,
                barycenter: Point::new(b).expect("finite"),
            })
        }
        Domain::Finite { points } => {
            for _ in 0..MAX_ATTEMPTS {
                let target = &points[rng.random_range(0..points.len())];
                let picks: Vec<&Point> = (0..=dim)
                    .map(|_| &points[rng.random_range(0..points.len())])
                    .collect();
                if let Some(lambdas) = barycentric(&picks, target) {
                    let base = with_base.then(|| points[rng.random_range(0..points.len())].clone());
                    return Some(Sample {
                        base,
                        atoms: picks.into_iter().cloned().collect(),
                        lambdas,
                        barycenter: target.clone(),
                    });
                }
            }
            None
        }
    }
}

fn run_sampled<G>(domain: &Domain, with_base: bool, n: usize, seed: u64, excess: G) -> Result<SimplexOutcome>
where
    G: Fn(&Sample) -> Result<f64> + Sync,
{
    domain.validate()?;
    let results: Vec<Result<Option<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| draw(domain, with_base, seed, i).map(|s| excess(&s)).transpose())
        .collect();
    let mut max_excess = f64::NEG_INFINITY;
    let mut max_abs_gap: f64 = 0.0;
    let mut skipped = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r? {
            None => skipped += 1,
            Some(e) if e > VIOLATION_TOL => {
                let s = draw(domain, with_base, seed, i).expect("sample reproduces");
                return Ok(SimplexOutcome::Violated {
                    sample: i,
                    witness: SimplexWitness {
                        base: s.base,
                        atoms: s.atoms,
                        lambdas: s.lambdas,
                        violation: e,
                    },
                });
            }
            Some(e) => {
                max_excess = max_excess.max(e);
                max_abs_gap = max_abs_gap.max(e.abs());
            }
        }
    }
    Ok(SimplexOutcome::Passed {
        samples: n - skipped,
        skipped,
        max_excess,
        max_abs_gap,
    })
}

/// Samples `f1(x̄) − Σ λᵢ f2(xᵢ) ≤ Σ λᵢ c(x̄, xᵢ)` with `x̄ = Σ λᵢ xᵢ` and returns
/// the first violation above `1e-8`. Sample `i` draws from a generator seeded
/// with `seed ^ i`. On a finite domain the atoms and `x̄` are all domain points.
pub fn simplex_inequality_check_fn<F1, F2>(
    f1: F1,
    f2: F2,
    cost: &CostSpec,
    domain: &Domain,
    n_samples: usize,
    seed: u64,
) -> Result<SimplexOutcome>
where
    F1: Fn(&[f64]) -> Result<f64> + Sync,
    F2: Fn(&[f64]) -> Result<f64> + Sync,
{
    run_sampled(domain, false, n_samples, seed, |s| {
        let mut lhs = f1(&s.barycenter)?;
        let mut rhs = 0.0;
        for (a, l) in s.atoms.iter().zip(&s.lambdas) {
            lhs -= l * f2(a)?;
            rhs += l * cost.evaluate(&s.barycenter, a)?;
        }
        Ok(lhs - rhs)
    })
}

/// [`simplex_inequality_check_fn`] for registry evaluators.
pub fn simplex_inequality_check(
    f1: &FunctionEvaluator,
    f2: &FunctionEvaluator,
    cost: &CostSpec,
    domain: &Domain,
    n_samples: usize,
    seed: u64,
) -> Result<SimplexOutcome> {
    simplex_inequality_check_fn(
        |x| f1.evaluate(x),
        |x| f2.evaluate(x),
        cost,
        domain,
        n_samples,
        seed,
    )
}

/// Samples the martingale triangle inequality
/// `Σ λᵢ c(x, xᵢ) − c(x, x̄) ≤ Σ λᵢ c(x̄, xᵢ)` with an independent base point `x`.
pub fn mti_check(cost: &CostSpec, domain: &Domain, n_samples: usize, seed: u64) -> Result<SimplexOutcome> {
    run_sampled(domain, true, n_samples, seed, |s| {
        let x = s.base.as_ref().expect("base point requested");
        let mut excess = -cost.evaluate(x, &s.barycenter)?;
        for (a, l) in s.atoms.iter().zip(&s.lambdas) {
            excess += l * (cost.evaluate(x, a)? - cost.evaluate(&s.barycenter, a)?);
        }
        Ok(excess)
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SecondOrderOutcome {
    Passed {
        pairs: usize,
        /// Smallest eigenvalue of `D₂²c(y,y) − D₂²c(x,y)` over all pairs.
        min_eigenvalue: f64,
        tolerance: f64,
    },
    Violated {
        x: Point,
        y: Point,
        eigenvalue: f64,
        tolerance: f64,
    },
}

/// Central-difference Hessian of `c(x, ·)` at `y`.
fn hessian_second(cost: &CostSpec, x: &[f64], y: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let n = y.len();
    let at = |da: Option<(usize, f64)>, db: Option<(usize, f64)>| -> Result<f64> {
        let mut z = y.to_vec();
        if let Some((a, s)) = da {
            z[a] += s;
        }
        if let Some((b, s)) = db {
            z[b] += s;
        }
        cost.evaluate(x, &z)
    };
    let mut m = DMatrix::zeros(n, n);
    let center = at(None, None)?;
    for a in 0..n {
        m[(a, a)] = (at(Some((a, h)), None)? - 2.0 * center + at(Some((a, -h)), None)?) / (h * h);
        for b in a + 1..n {
            let v = (at(Some((a, h)), Some((b, h)))? - at(Some((a, h)), Some((b, -h)))?
                - at(Some((a, -h)), Some((b, h)))?
                + at(Some((a, -h)), Some((b, -h)))?)
                / (4.0 * h * h);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    Ok(m)
}

/// Necessary second-order condition of the martingale triangle inequality:
/// `D₂²c(y,y) − D₂²c(x,y)` has no eigenvalue below `−10h²` for interior grid nodes `x, y`.
pub fn mti_second_order_check(cost: &CostSpec, grid: &BoxGrid, h: f64) -> Result<SecondOrderOutcome> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Invalid(format!("finite-difference step {h}")));
    }
    for (axis, &c) in grid.counts.iter().enumerate() {
        let interior = c.saturating_sub(2);
        if interior < 3 {
            return Err(Error::GridTooCoarse { axis, interior });
        }
    }
    let tol = 10.0 * h * h;
    let interior: Vec<Point> = grid
        .points()
        .into_iter()
        .filter(|p| {
            (0..grid.dim()).all(|a| p[a] != grid.lower[a] && p[a] != grid.upper[a])
        })
        .collect();
    let diag = interior
        .par_iter()
        .map(|y| hessian_second(cost, y, y, h))
        .collect::<Result<Vec<_>>>()?;
    let per_x: Vec<Result<(f64, Option<(usize, f64)>)>> = interior
        .par_iter()
        .map(|x| {
            let mut min_eig = f64::INFINITY;
            for (j, y) in interior.iter().enumerate() {
                let d = &diag[j] - hessian_second(cost, x, y, h)?;
                let e = SymmetricEigen::new(d).eigenvalues.min();
                if e < -tol {
                    return Ok((e, Some((j, e))));
                }
                min_eig = min_eig.min(e);
            }
            Ok((min_eig, None))
        })
        .collect();
    let mut min_eigenvalue = f64::INFINITY;
    for (i, r) in per_x.into_iter().enumerate() {
        let (e, hit) = r?;
        if let Some((j, eigenvalue)) = hit {
            return Ok(SecondOrderOutcome::Violated {
                x: interior[i].clone(),
                y: interior[j].clone(),
                eigenvalue,
                tolerance: tol,
            });
        }
        min_eigenvalue = min_eigenvalue.min(e);
    }
    Ok(SecondOrderOutcome::Passed {
        pairs: interior.len() * interior.len(),
        min_eigenvalue,
        tolerance: tol,
    })
}

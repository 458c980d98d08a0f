use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::evaluator::{BAtom, BoxGrid, FunctionEvaluator, ModulusSpec};
use crate::error::{Error, Result};
use crate::lp::{self, Bound, Constraint, Feasibility, SolverConfig};
use crate::measures::{check_dim, distance, dot, sub, CostSpec, Point, PointMap};

/// Slack accepted when checking a supplied gamma field or lower bound.
pub const CERTIFY_TOL: f64 = 1e-9;
/// Farkas multipliers below this are not reported.
const WEIGHT_TOL: f64 = 1e-12;

/// One constraint `⟨γ, x − y⟩ ≤ rhs` of the per-point feasibility problem,
/// with its nonnegative multiplier in the infeasibility proof.
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintRef {
    pub y: Point,
    pub weight: f64,
    pub rhs: f64,
}

/// Point at which no gamma exists, with the constraints that rule it out:
/// `Σ weight · (x − y) = 0` while `Σ weight · rhs < 0`.
#[derive(Clone, Debug, Serialize)]
pub struct CounterexamplePoint {
    pub x: Point,
    pub index: usize,
    pub constraints: Vec<ConstraintRef>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CertifyOutcome {
    Certified {
        gamma: PointMap<Vec<f64>>,
        /// Whether constraints were restricted to the boundary face of each point.
        face_restricted: bool,
    },
    Counterexample(CounterexamplePoint),
}

impl CertifyOutcome {
    pub fn gamma(&self) -> Option<&PointMap<Vec<f64>>> {
        match self {
            CertifyOutcome::Certified { gamma, .. } => Some(gamma),
            CertifyOutcome::Counterexample(_) => None,
        }
    }

    pub fn counterexample(&self) -> Option<&CounterexamplePoint> {
        match self {
            CertifyOutcome::Counterexample(c) => Some(c),
            CertifyOutcome::Certified { .. } => None,
        }
    }
}

enum PointResult {
    Gamma(Vec<f64>),
    Fail(Vec<ConstraintRef>),
}

/// Finds `γ` with `f1(x) − f2(y) ≤ c(x,y) + ⟨γ, y − x⟩` for all admissible `y`.
fn certify_point<C, A>(
    x: &Point,
    fx: f64,
    ys: &[Point],
    f2: &[f64],
    cost: &C,
    admissible: &A,
) -> Result<PointResult>
where
    C: Fn(&Point, &Point) -> Result<f64>,
    A: Fn(&Point, &Point) -> bool,
{
    let dim = x.dim();
    let mut rows = Vec::new();
    let mut refs = Vec::new();
    for (y, fy) in ys.iter().zip(f2) {
        if !admissible(x, y) {
            continue;
        }
        let rhs = cost(x, y)? + fy - fx;
        if y.coords() == x.coords() {
            if rhs < -CERTIFY_TOL {
                return Ok(PointResult::Fail(vec![ConstraintRef {
                    y: y.clone(),
                    weight: 1.0,
                    rhs,
                }]));
            }
            continue;
        }
        rows.push(Constraint::le(
            x.iter().zip(y.iter()).map(|(a, b)| a - b).collect(),
            rhs,
        ));
        refs.push((y.clone(), rhs));
    }
    if rows.is_empty() {
        return Ok(PointResult::Gamma(vec![0.0; dim]));
    }
    let bounds = vec![Bound::Free; dim];
    Ok(match lp::check_feasibility(&rows, &bounds, &SolverConfig::default())? {
        Feasibility::Feasible(g) => PointResult::Gamma(g),
        Feasibility::Infeasible(w) => {
            let lambda: Vec<f64> = w.iter().map(|wi| (-wi).max(0.0)).collect();
            let lambda = sparsify(&rows, &refs, lambda, dim);
            PointResult::Fail(
                refs.into_iter()
                    .zip(lambda)
                    .filter(|(_, wi)| *wi > WEIGHT_TOL)
                    .map(|((y, rhs), weight)| ConstraintRef { y, weight, rhs })
                    .collect(),
            )
        }
    })
}

/// Shrinks the support of a Farkas combination to at most `dim + 1` rows while keeping
/// `Σ λ a = 0` and `Σ λ b` fixed, by walking along kernel directions of `[a; b]`.
fn sparsify(rows: &[Constraint], refs: &[(Point, f64)], mut lambda: Vec<f64>, dim: usize) -> Vec<f64> {
    loop {
        let support: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > WEIGHT_TOL).collect();
        let s = support.len();
        if s <= dim + 1 {
            return lambda;
        }
        let m = DMatrix::from_fn(s, s, |r, c| {
            let i = support[c];
            match r {
                r if r < dim => rows[i].coeffs[r],
                r if r == dim => refs[i].1,
                _ => 0.0,
            }
        });
        let svd = m.svd(false, true);
        let Some(v_t) = svd.v_t else { return lambda };
        let k = (0..s)
            .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
            .unwrap_or(0);
        let mut delta: Vec<f64> = v_t.row(k).iter().copied().collect();
        if delta.iter().all(|d| *d <= 0.0) {
            delta.iter_mut().for_each(|d| *d = -*d);
        }
        let Some((hit, t)) = support
            .iter()
            .zip(&delta)
            .enumerate()
            .filter(|(_, (_, d))| **d > 1e-14)
            .map(|(pos, (&i, d))| (pos, lambda[i] / d))
            .min_by(|a, b| a.1.total_cmp(&b.1))
        else {
            return lambda;
        };
        for (pos, (&i, d)) in support.iter().zip(&delta).enumerate() {
            lambda[i] = if pos == hit { 0.0 } else { (lambda[i] - t * d).max(0.0) };
        }
    }
}

fn certify_all<C, A>(
    f1: &PointMap<f64>,
    f2: &PointMap<f64>,
    cost: C,
    admissible: A,
    face_restricted: bool,
) -> Result<CertifyOutcome>
where
    C: Fn(&Point, &Point) -> Result<f64> + Sync,
    A: Fn(&Point, &Point) -> bool + Sync,
{
    if f1.is_empty() || f2.is_empty() {
        return Err(Error::Empty("certification needs nonempty sample sets".into()));
    }
    let dim = f1.points()[0].dim();
    for p in f1.points().iter().chain(f2.points()) {
        check_dim(dim, p.dim())?;
    }
    let results: Vec<Result<PointResult>> = f1
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(x, fx)| certify_point(x, **fx, f2.points(), f2.values(), &cost, &admissible))
        .collect();
    let mut gammas = Vec::with_capacity(f1.len());
    for (index, r) in results.into_iter().enumerate() {
        match r? {
            PointResult::Gamma(g) => gammas.push(g),
            PointResult::Fail(constraints) => {
                return Ok(CertifyOutcome::Counterexample(CounterexamplePoint {
                    x: f1.points()[index].clone(),
                    index,
                    constraints,
                }))
            }
        }
    }
    Ok(CertifyOutcome::Certified {
        gamma: PointMap::new(f1.points().to_vec(), gammas)?,
        face_restricted,
    })
}

/// Per-point gamma with `f1(x) − f2(y) ≤ c(x,y) + ⟨γ(x), y − x⟩` for all sample
/// points `x` of `f1` and `y` of `f2`, or the first `x` admitting none.
pub fn gamma_certify(f1: &PointMap<f64>, f2: &PointMap<f64>, cost: &CostSpec) -> Result<CertifyOutcome> {
    certify_all(f1, f2, |x, y| cost.evaluate(x, y), |_, _| true, false)
}

/// As [`gamma_certify`] on box-grid samples, with `y` restricted to the boundary
/// faces containing `x`.
pub fn gamma_certify_on_grid(
    f1: &PointMap<f64>,
    f2: &PointMap<f64>,
    cost: &CostSpec,
    grid: &BoxGrid,
) -> Result<CertifyOutcome> {
    certify_all(f1, f2, |x, y| cost.evaluate(x, y), |x, y| grid.same_face(x, y), true)
}

/// `x ↦ max over atoms of b − c(y,x) + ⟨a, x − y⟩`, i.e. gamma `−a` at each atom.
pub fn bclass_generate(atoms: Vec<BAtom>, cost: CostSpec) -> Result<FunctionEvaluator> {
    let Some(first) = atoms.first() else {
        return Err(Error::Empty("bclass_generate needs at least one atom".into()));
    };
    let dim = first.y.dim();
    for a in &atoms {
        check_dim(dim, a.y.dim())?;
        check_dim(dim, a.a.len())?;
        if !a.b.is_finite() || a.a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("B-class atom".into()));
        }
    }
    Ok(FunctionEvaluator::BclassSup { atoms, cost })
}

/// Output of [`extend`].
#[derive(Clone, Debug, Serialize)]
pub struct Extension {
    /// `g̃₀`, or `g̃₀ ∨ lower_bound` when a bound is given, at the targets.
    pub values: PointMap<f64>,
    /// `g̃₀` at the targets before taking the maximum with the bound.
    pub base_values: Vec<f64>,
    /// `max |g̃₀ − g|` over the sample set.
    pub restriction_error: f64,
}

fn extension_at(
    g: &PointMap<f64>,
    gamma: &[Vec<f64>],
    cost: &CostSpec,
    z: &[f64],
) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for ((y, gy), gam) in g.iter().zip(gamma) {
        let shift = sub(z, y);
        best = best.max(gy - cost.evaluate(y, z)? - dot(gam, &shift));
    }
    Ok(best)
}

/// Extends `g` from its sample set `K` by
/// `g̃₀(z) = max_{y ∈ K} g(y) − c(y,z) − ⟨γ(y), z − y⟩`, optionally joined with a
/// lower bound.
pub fn extend(
    g: &PointMap<f64>,
    cost: &CostSpec,
    gamma: &PointMap<Vec<f64>>,
    targets: &[Point],
    lower_bound: Option<&FunctionEvaluator>,
) -> Result<Extension> {
    if g.is_empty() {
        return Err(Error::Empty("extension needs samples".into()));
    }
    let dim = g.points()[0].dim();
    if cost.growth_bound(dim).is_none() {
        return Err(Error::MissingGrowthBound);
    }
    let gam: Vec<Vec<f64>> = g
        .points()
        .iter()
        .map(|p| {
            gamma
                .get(p)
                .cloned()
                .ok_or_else(|| Error::GammaMissing(p.to_vec()))
        })
        .collect::<Result<_>>()?;
    for (p, v) in gam.iter().zip(g.points()) {
        check_dim(dim, p.len())?;
        check_dim(dim, v.dim())?;
    }
    let worst: Vec<Result<(f64, usize)>> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let (x, gx) = (&g.points()[i], g.values()[i]);
            let mut worst = f64::NEG_INFINITY;
            for (y, gy) in g.iter() {
                let tilt: f64 = gam[i].iter().zip(y.iter().zip(x.iter())).map(|(a, (b, c))| a * (b - c)).sum();
                worst = worst.max(gx - gy - cost.evaluate(x, y)? - tilt);
            }
            Ok((worst, i))
        })
        .collect();
    for r in worst {
        let (excess, i) = r?;
        if excess > CERTIFY_TOL {
            return Err(Error::GammaNotCertifying {
                point: g.points()[i].to_vec(),
                excess,
            });
        }
    }
    if let Some(lb) = lower_bound {
        for (y, gy) in g.iter() {
            let excess = lb.evaluate(y)? - gy;
            if excess > CERTIFY_TOL {
                return Err(Error::LowerBoundViolation {
                    point: y.to_vec(),
                    excess,
                });
            }
        }
    }
    let restriction_error = g
        .points()
        .par_iter()
        .zip(g.values())
        .map(|(y, gy)| extension_at(g, &gam, cost, y).map(|v| (v - gy).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let base_values = targets
        .par_iter()
        .map(|z| {
            check_dim(dim, z.dim())?;
            extension_at(g, &gam, cost, z)
        })
        .collect::<Result<Vec<f64>>>()?;
    let values = match lower_bound {
        None => base_values.clone(),
        Some(lb) => base_values
            .iter()
            .zip(targets)
            .map(|(v, z)| lb.evaluate(z).map(|b| v.max(b)))
            .collect::<Result<_>>()?,
    };
    Ok(Extension {
        values: PointMap::new(targets.to_vec(), values)?,
        base_values,
        restriction_error,
    })
}

fn modulus_checks(sigma: &ModulusSpec, grid: &BoxGrid) -> Result<()> {
    sigma.validate()?;
    if sigma.evaluate(0.0) != 0.0 {
        return Err(Error::Invalid("modulus must vanish at 0".into()));
    }
    if sigma.growth_on(grid.diameter()).is_none() {
        return Err(Error::MissingGrowthBound);
    }
    Ok(())
}

/// Certifies `f(x) + σ(‖y − x‖) + ⟨γ(x), y − x⟩ ≤ f(y)` on a box grid, with
/// boundary points checked against their own face. The returned gamma is
/// the uniform-convexity slope (`2x` for `‖x‖²`).
pub fn uniform_convexity_certify(
    f: &FunctionEvaluator,
    sigma: &ModulusSpec,
    grid: &BoxGrid,
) -> Result<CertifyOutcome> {
    modulus_checks(sigma, grid)?;
    let samples = f.sample(&grid.points())?;
    let out = certify_all(
        &samples,
        &samples,
        |x, y| Ok(-sigma.evaluate(distance(x, y))),
        |x, y| grid.same_face(x, y),
        true,
    )?;
    Ok(match out {
        CertifyOutcome::Certified { gamma, face_restricted } => CertifyOutcome::Certified {
            gamma: gamma.map_values(|g| g.iter().map(|v| -v).collect()),
            face_restricted,
        },
        other => other,
    })
}

/// Certifies `f(y) ≤ f(x) + ⟨γ(x), y − x⟩ + σ(‖y − x‖)` on a box grid, by
/// certifying `−f` against the cost `σ(‖y − x‖)`.
pub fn uniform_smoothness_certify(
    f: &FunctionEvaluator,
    sigma: &ModulusSpec,
    grid: &BoxGrid,
) -> Result<CertifyOutcome> {
    modulus_checks(sigma, grid)?;
    let samples = f.sample(&grid.points())?.map_values(|v| -v);
    certify_all(
        &samples,
        &samples,
        |x, y| Ok(sigma.evaluate(distance(x, y))),
        |x, y| grid.same_face(x, y),
        true,
    )
}

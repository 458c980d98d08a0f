use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{disintegrate, strassen_coupling, FIBER_DROP_TOL};
use crate::error::{Error, Result};
use crate::measures::{distance, CostSpec, Coupling, DiscreteMeasure, Point};

/// Smallest singular value at which centered atoms count as affinely independent.
pub const AFFINE_TOL: f64 = 1e-9;
/// Largest accepted distance between a fan's barycenter and its center.
const BARYCENTER_TOL: f64 = 1e-9;

/// `(δ_center, Σ λᵢ δ_{atomᵢ})` with affinely independent atoms.
#[derive(Clone, Debug, Serialize)]
pub struct Fan {
    pub center: Point,
    pub atoms: Vec<Point>,
    pub lambdas: Vec<f64>,
}

impl Fan {
    pub fn measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.center.dim(), self.atoms.clone(), self.lambdas.clone())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FanEntry {
    pub weight: f64,
    #[serde(flatten)]
    pub fan: Fan,
}

/// Mixture of fans.
#[derive(Clone, Debug, Default, Serialize)]
pub struct FanRepresentation {
    pub entries: Vec<FanEntry>,
}

impl FanRepresentation {
    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    /// `Σ w δ_center`, as an atom list with repeats.
    pub fn first_marginal(&self) -> Vec<(&Point, f64)> {
        self.entries.iter().map(|e| (&e.fan.center, e.weight)).collect()
    }

    /// `Σ w Σ λᵢ δ_{atomᵢ}`, as an atom list with repeats.
    pub fn second_marginal(&self) -> Vec<(&Point, f64)> {
        self.entries
            .iter()
            .flat_map(|e| e.fan.atoms.iter().zip(&e.fan.lambdas).map(move |(a, l)| (a, e.weight * l)))
            .collect()
    }

    /// Larger of the total-variation distances between the recomposed marginals and `(mu, nu)`.
    pub fn recomposition_error(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let a = crate::measures::total_variation(self.first_marginal(), mu.atoms());
        let b = crate::measures::total_variation(self.second_marginal(), nu.atoms());
        a.max(b)
    }
}

/// Smallest singular value of the columns `xᵢ − x₁`; `+∞` for a single atom.
fn centered_sigma_min(atoms: &[Point]) -> f64 {
    if atoms.len() < 2 {
        return f64::INFINITY;
    }
    let dim = atoms[0].dim();
    let m = DMatrix::from_fn(dim, atoms.len() - 1, |r, c| atoms[c + 1][r] - atoms[0][r]);
    if atoms.len() - 1 > dim {
        return 0.0;
    }
    m.singular_values().min()
}

/// Outcome of [`is_extreme_pair`]; `reason` names the first failed clause.
#[derive(Clone, Debug, Serialize)]
pub struct ExtremeCheck {
    pub extreme: bool,
    pub reason: Option<String>,
}

/// Whether `(δ_center, nu)` is an extreme martingale pair.
pub fn is_extreme_pair(center: &Point, nu: &DiscreteMeasure) -> ExtremeCheck {
    let fail = |r: String| ExtremeCheck {
        extreme: false,
        reason: Some(r),
    };
    let dim = center.dim();
    if nu.dim() != dim {
        return fail(format!("dimension {} differs from center dimension {dim}", nu.dim()));
    }
    if nu.len() > dim + 1 {
        return fail(format!("{} atoms exceed dim + 1 = {}", nu.len(), dim + 1));
    }
    if let Some(i) = nu.weights().iter().position(|w| *w <= 0.0) {
        return fail(format!("weight {i} is not positive"));
    }
    let sigma = centered_sigma_min(nu.points());
    if sigma <= AFFINE_TOL {
        return fail(format!("atoms affinely dependent (smallest singular value {sigma:e})"));
    }
    let d = distance(nu.barycenter().coords(), center.coords());
    if d > BARYCENTER_TOL {
        return fail(format!("barycenter is {d:e} away from the center"));
    }
    ExtremeCheck {
        extreme: true,
        reason: None,
    }
}

/// Unit vector `s` with `Σ sᵢ xᵢ ≈ 0` and `Σ sᵢ ≈ 0`: the right-singular vector
/// of the smallest singular value of the lifted matrix with columns `(xᵢ, 1)`.
fn lifted_kernel(atoms: &[Point]) -> Vec<f64> {
    let k = atoms.len();
    let dim = atoms[0].dim();
    let rows = k.max(dim + 1);
    let m = DMatrix::from_fn(rows, k, |r, c| {
        if r < dim {
            atoms[c][r]
        } else if r == dim {
            1.0
        } else {
            0.0
        }
    });
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let (pos, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one singular value");
    v_t.row(pos).iter().copied().collect()
}

/// Largest `ε ≥ 0` keeping `λ + ε s ≥ 0`, with the lowest-index coordinate that
/// reaches zero first.
fn step_to_boundary(lambdas: &[f64], s: &[f64]) -> (f64, usize) {
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, (l, si)) in lambdas.iter().zip(s).enumerate() {
        if *si < 0.0 {
            let eps = l / -si;
            if eps < best.0 {
                best = (eps, i);
            }
        }
    }
    best
}

fn child(atoms: &[Point], lambdas: &[f64], s: &[f64], eps: f64, killed: usize) -> (Vec<Point>, Vec<f64>) {
    let moved: Vec<f64> = lambdas
        .iter()
        .zip(s)
        .enumerate()
        .map(|(i, (l, si))| if i == killed { 0.0 } else { (l + eps * si).max(0.0) })
        .collect();
    let total: f64 = moved.iter().sum();
    atoms
        .iter()
        .zip(moved)
        .filter(|(_, l)| *l / total > FIBER_DROP_TOL)
        .map(|(a, l)| (a.clone(), l / total))
        .unzip()
}

/// Splits `(δ_center, nu)` into a mixture of fans, each with at most `dim + 1`
/// affinely independent atoms and barycenter `center`.
pub fn fan_decompose(center: &Point, nu: &DiscreteMeasure) -> Result<FanRepresentation> {
    crate::measures::check_dim(center.dim(), nu.dim())?;
    let distance_to_center = distance(nu.barycenter().coords(), center.coords());
    if distance_to_center > BARYCENTER_TOL {
        return Err(Error::BarycenterMismatch {
            distance: distance_to_center,
        });
    }
    let dim = center.dim();
    let mut out = FanRepresentation::default();
    let (atoms, lambdas): (Vec<Point>, Vec<f64>) = nu
        .atoms()
        .filter(|(_, w)| *w > 0.0)
        .map(|(p, w)| (p.clone(), w))
        .unzip();
    let mut stack = vec![(1.0, atoms, lambdas)];
    while let Some((weight, atoms, lambdas)) = stack.pop() {
        if atoms.len() <= dim + 1 && centered_sigma_min(&atoms) > AFFINE_TOL {
            out.entries.push(FanEntry {
                weight,
                fan: Fan {
                    center: center.clone(),
                    atoms,
                    lambdas,
                },
            });
            continue;
        }
        let s = lifted_kernel(&atoms);
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let (eps_plus, kill_plus) = step_to_boundary(&lambdas, &s);
        let (eps_minus, kill_minus) = step_to_boundary(&lambdas, &neg);
        if !(eps_plus.is_finite() && eps_minus.is_finite()) || eps_plus + eps_minus <= 0.0 {
            return Err(Error::NumericalBreakdown(
                "kernel direction has no sign change".into(),
            ));
        }
        let total = eps_plus + eps_minus;
        let plus = child(&atoms, &lambdas, &s, eps_plus, kill_plus);
        let minus = child(&atoms, &lambdas, &s, -eps_minus, kill_minus);
        // Pushed in reverse so the plus branch is emitted first.
        stack.push((weight * eps_plus / total, minus.0, minus.1));
        stack.push((weight * eps_minus / total, plus.0, plus.1));
    }
    Ok(out)
}

/// Decomposes every fiber of a martingale coupling, ordered by source index.
pub fn represent_coupling(coupling: &Coupling) -> Result<FanRepresentation> {
    let fibers = disintegrate(coupling)?;
    let parts = fibers
        .par_iter()
        .map(|f| fan_decompose(&f.x, &f.nu_x).map(|rep| (f.mass, rep)))
        .collect::<Result<Vec<_>>>()?;
    let entries = parts
        .into_iter()
        .flat_map(|(mass, rep)| {
            rep.entries.into_iter().map(move |e| FanEntry {
                weight: mass * e.weight,
                fan: e.fan,
            })
        })
        .collect();
    Ok(FanRepresentation { entries })
}

/// Mixture of extreme fan martingales representing `(mu, nu)`.
pub fn choquet_represent(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<FanRepresentation> {
    represent_coupling(&strassen_coupling(mu, nu)?)
}

/// `Σ w Σ λᵢ c(center, atomᵢ)`.
pub fn representation_cost(rep: &FanRepresentation, cost: &CostSpec) -> Result<f64> {
    let mut total = 0.0;
    for e in &rep.entries {
        for (a, l) in e.fan.atoms.iter().zip(&e.fan.lambdas) {
            total += e.weight * l * cost.evaluate(&e.fan.center, a)?;
        }
    }
    Ok(total)
}

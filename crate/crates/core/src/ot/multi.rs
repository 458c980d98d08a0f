use serde::{Deserialize, Serialize};

use super::{MultiPotentials, FEASIBILITY_TOL};
use crate::error::{Error, Result};
use crate::lp::{self, Bound, Constraint, LinearProgram, Sense};
use crate::measures::{check_dim, unravel_axis, CostSpec, DiscreteMeasure, MultiCoupling, Point, PointMap};

/// Largest dense product tensor the multimarginal solvers will build.
pub const MAX_PRODUCT_ENTRIES: usize = 1_000_000;
/// Fixed-point residual at which sweeping stops.
const SWEEP_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 100;
/// Residual accepted by [`normalize_potentials`].
const FIXED_POINT_TOL: f64 = 1e-8;

/// Cost on a k-fold product.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiCost {
    /// `Σ_{i<j} c(xᵢ, xⱼ)`.
    PairwiseSum { cost: CostSpec },
    /// Explicit row-major values indexed by support positions.
    Tensor { shape: Vec<usize>, values: Vec<f64> },
}

/// A [`MultiCost`] tabulated over concrete supports.
#[derive(Clone, Debug)]
pub struct ProductCost {
    supports: Vec<Vec<Point>>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

/// Calls `f(flat, idx)` for every multi-index of `shape` in row-major order.
fn for_each_index<F: FnMut(usize, &[usize])>(shape: &[usize], mut f: F) {
    let total: usize = shape.iter().product();
    let mut idx = vec![0; shape.len()];
    for flat in 0..total {
        f(flat, &idx);
        for axis in (0..shape.len()).rev() {
            idx[axis] += 1;
            if idx[axis] < shape[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

impl ProductCost {
    pub fn new(supports: Vec<Vec<Point>>, cost: &MultiCost) -> Result<Self> {
        if supports.len() < 2 {
            return Err(Error::Invalid("need at least two marginals".into()));
        }
        if let Some(empty) = supports.iter().position(Vec::is_empty) {
            return Err(Error::Empty(format!("support {empty}")));
        }
        let dim = supports[0][0].dim();
        for p in supports.iter().flatten() {
            check_dim(dim, p.dim())?;
        }
        let shape: Vec<usize> = supports.iter().map(Vec::len).collect();
        let entries = shape
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .unwrap_or(usize::MAX);
        if entries > MAX_PRODUCT_ENTRIES {
            return Err(Error::ProductTooLarge {
                entries,
                limit: MAX_PRODUCT_ENTRIES,
            });
        }
        let values = match cost {
            MultiCost::PairwiseSum { cost } => {
                let k = shape.len();
                let mut pair_tables = Vec::new();
                for i in 0..k {
                    for j in i + 1..k {
                        let t = supports[i]
                            .iter()
                            .map(|x| {
                                supports[j]
                                    .iter()
                                    .map(|y| cost.evaluate(x, y))
                                    .collect::<Result<Vec<f64>>>()
                            })
                            .collect::<Result<Vec<_>>>()?;
                        pair_tables.push((i, j, t));
                    }
                }
                let mut values = vec![0.0; entries];
                for_each_index(&shape, |flat, idx| {
                    values[flat] = pair_tables.iter().map(|(i, j, t)| t[idx[*i]][idx[*j]]).sum();
                });
                values
            }
            MultiCost::Tensor {
                shape: declared,
                values,
            } => {
                if declared != &shape || values.len() != entries {
                    return Err(Error::Invalid(format!(
                        "cost tensor shape {declared:?} does not match supports {shape:?}"
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("cost tensor entry".into()));
                }
                values.clone()
            }
        };
        Ok(ProductCost {
            supports,
            shape,
            values,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn supports(&self) -> &[Vec<Point>] {
        &self.supports
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cost at a multi-index.
    pub fn at(&self, idx: &[usize]) -> f64 {
        let flat = idx
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i);
        self.values[flat]
    }

    /// `max |c|` over the product.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multi-index of the given points.
    pub fn locate(&self, points: &[Point]) -> Result<Vec<usize>> {
        if points.len() != self.shape.len() {
            return Err(Error::Invalid(format!(
                "{} points for {} marginals",
                points.len(),
                self.shape.len()
            )));
        }
        points
            .iter()
            .zip(&self.supports)
            .map(|(p, s)| {
                s.iter()
                    .position(|q| q.coords() == p.coords())
                    .ok_or_else(|| Error::OffGrid(p.to_vec()))
            })
            .collect()
    }

    /// `min` over the product of `c − Σ_{j≠i} f_j(x_j)` as a function of `xᵢ`,
    /// skipping tuples where some `f_j` is undefined.
    fn transform(&self, f: &[Vec<Option<f64>>], i: usize) -> Vec<f64> {
        let mut out = vec![f64::INFINITY; self.shape[i]];
        for_each_index(&self.shape, |flat, idx| {
            let mut v = self.values[flat];
            for (j, fj) in f.iter().enumerate() {
                if j != i {
                    match fj[idx[j]] {
                        Some(x) => v -= x,
                        None => return,
                    }
                }
            }
            if v < out[idx[i]] {
                out[idx[i]] = v;
            }
        });
        out
    }

    /// Largest `|fᵢ(xᵢ) − min (c − Σ_{j≠i} f_j)|` over all marginals and points.
    pub fn fixed_point_residual(&self, f: &[Vec<f64>]) -> f64 {
        let wrapped = wrap(f);
        (0..self.shape.len())
            .map(|i| {
                self.transform(&wrapped, i)
                    .iter()
                    .zip(&f[i])
                    .fold(0.0f64, |m, (t, v)| m.max((t - v).abs()))
            })
            .fold(0.0, f64::max)
    }

    /// `max (Σ fᵢ(xᵢ) − c)` over the product; nonpositive for feasible potentials.
    pub fn max_violation(&self, f: &[Vec<f64>]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for_each_index(&self.shape, |flat, idx| {
            let s: f64 = idx.iter().enumerate().map(|(j, &x)| f[j][x]).sum();
            worst = worst.max(s - self.values[flat]);
        });
        worst
    }

    fn to_maps(&self, f: Vec<Vec<f64>>) -> Result<MultiPotentials> {
        let f = self
            .supports
            .iter()
            .zip(f)
            .map(|(s, v)| PointMap::new(s.clone(), v))
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiPotentials { f })
    }

    fn values_of(&self, pots: &MultiPotentials) -> Result<Vec<Vec<f64>>> {
        if pots.f.len() != self.shape.len() {
            return Err(Error::Invalid(format!(
                "{} potentials for {} marginals",
                pots.f.len(),
                self.shape.len()
            )));
        }
        self.supports
            .iter()
            .zip(&pots.f)
            .map(|(s, m)| s.iter().map(|p| m.try_get(p).copied()).collect())
            .collect()
    }
}

fn wrap(f: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    f.iter().map(|v| v.iter().map(|&x| Some(x)).collect()).collect()
}

fn product_of(measures: &[DiscreteMeasure], cost: &MultiCost) -> Result<ProductCost> {
    let supports = measures.iter().map(|m| m.points().to_vec()).collect();
    ProductCost::new(supports, cost)
}

/// Minimizes `Σ π c` over couplings of `measures`.
pub fn multimarginal_primal(
    measures: &[DiscreteMeasure],
    cost: &MultiCost,
) -> Result<(MultiCoupling, f64)> {
    let pc = product_of(measures, cost)?;
    let shape = pc.shape().to_vec();
    let n = pc.values.len();
    let mut prog = LinearProgram::new(Sense::Minimize, pc.values.clone(), Bound::NonNegative);
    for (axis, m) in measures.iter().enumerate() {
        let mut rows = vec![vec![0.0; n]; shape[axis]];
        for flat in 0..n {
            rows[unravel_axis(flat, &shape, axis)][flat] = 1.0;
        }
        for (row, w) in rows.into_iter().zip(m.weights()) {
            prog.push(Constraint::eq(row, *w));
        }
    }
    let sol = lp::solve_optimal(&prog, "multimarginal primal")?;
    let coupling = MultiCoupling::with_marginals(measures.to_vec(), sol.primal)?;
    let value = coupling
        .mass()
        .iter()
        .zip(&pc.values)
        .map(|(m, c)| m * c)
        .sum();
    Ok((coupling, value))
}

/// Maximizes `Σᵢ ∫ fᵢ dμᵢ` subject to `Σ fᵢ(xᵢ) ≤ c` on the product.
pub fn multimarginal_dual(
    measures: &[DiscreteMeasure],
    cost: &MultiCost,
) -> Result<(MultiPotentials, f64)> {
    let pc = product_of(measures, cost)?;
    let shape = pc.shape().to_vec();
    let offsets: Vec<usize> = shape
        .iter()
        .scan(0, |acc, &n| {
            let o = *acc;
            *acc += n;
            Some(o)
        })
        .collect();
    let vars: usize = shape.iter().sum();
    let objective = measures.iter().flat_map(|m| m.weights().to_vec()).collect();
    let mut prog = LinearProgram::new(Sense::Maximize, objective, Bound::Free);
    for_each_index(&shape, |flat, idx| {
        let mut row = vec![0.0; vars];
        for (axis, &i) in idx.iter().enumerate() {
            row[offsets[axis] + i] = 1.0;
        }
        prog.push(Constraint::le(row, pc.values[flat]));
    });
    let sol = lp::solve_optimal(&prog, "multimarginal dual")?;
    let f: Vec<Vec<f64>> = offsets
        .iter()
        .zip(&shape)
        .map(|(&o, &n)| sol.primal[o..o + n].to_vec())
        .collect();
    let value = measures
        .iter()
        .zip(&f)
        .map(|(m, fi)| m.weights().iter().zip(fi).map(|(w, v)| w * v).sum::<f64>())
        .sum();
    Ok((pc.to_maps(f)?, value))
}

fn convexify(pc: &ProductCost, mut f: Vec<Vec<Option<f64>>>) -> Vec<Vec<f64>> {
    let k = pc.shape.len();
    for i in 0..k {
        f[i] = pc.transform(&f, i).into_iter().map(Some).collect();
    }
    let mut full: Vec<Vec<f64>> = f
        .into_iter()
        .map(|v| v.into_iter().map(|x| x.expect("forward pass fills every entry")).collect())
        .collect();
    for _ in 0..MAX_SWEEPS {
        if pc.fixed_point_residual(&full) <= SWEEP_TOL {
            break;
        }
        for i in 0..k {
            full[i] = pc.transform(&wrap(&full), i);
        }
    }
    full
}

/// Extends potentials given on subsets `Aᵢ` of the supports to c-convex
/// potentials on the full supports, by the inductive infimum followed by
/// repeated sweeps until the fixed-point residual is at most `1e-9`.
pub fn multi_c_convexify(
    partial: &[PointMap<f64>],
    cost: &MultiCost,
    supports: &[Vec<Point>],
) -> Result<MultiPotentials> {
    let pc = ProductCost::new(supports.to_vec(), cost)?;
    if partial.len() != supports.len() {
        return Err(Error::Invalid(format!(
            "{} partial potentials for {} supports",
            partial.len(),
            supports.len()
        )));
    }
    let mut init: Vec<Vec<Option<f64>>> = Vec::with_capacity(partial.len());
    for (i, (map, support)) in partial.iter().zip(supports).enumerate() {
        if map.is_empty() {
            return Err(Error::Empty(format!("subset A_{}", i + 1)));
        }
        let mut v = vec![None; support.len()];
        for (p, val) in map.iter() {
            let pos = support
                .iter()
                .position(|q| q.coords() == p.coords())
                .ok_or_else(|| Error::OffGrid(p.to_vec()))?;
            v[pos] = Some(*val);
        }
        init.push(v);
    }
    let mut violation = f64::NEG_INFINITY;
    for_each_index(&pc.shape, |flat, idx| {
        let mut s = 0.0;
        for (j, &x) in idx.iter().enumerate() {
            match init[j][x] {
                Some(v) => s += v,
                None => return,
            }
        }
        violation = violation.max(s - pc.values[flat]);
    });
    if violation > FEASIBILITY_TOL {
        return Err(Error::InfeasibleInput { violation });
    }
    let full = convexify(&pc, init);
    pc.to_maps(full)
}

/// c-convexification seeded at one product point: `f₁ = c(seed)` at the first
/// seed coordinate and `fᵢ = 0` at the others, so the output sums to `c` there.
pub fn multi_c_convexify_seeded(
    seed: &[Point],
    cost: &MultiCost,
    supports: &[Vec<Point>],
) -> Result<MultiPotentials> {
    let pc = ProductCost::new(supports.to_vec(), cost)?;
    let idx = pc.locate(seed)?;
    let at_seed = pc.at(&idx);
    let init = idx
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut v = vec![None; pc.shape[i]];
            v[x] = Some(if i == 0 { at_seed } else { 0.0 });
            v
        })
        .collect();
    pc.to_maps(convexify(&pc, init))
}

/// Output of [`normalize_potentials`].
#[derive(Clone, Debug, Serialize)]
pub struct Normalized {
    pub potentials: MultiPotentials,
    /// Constants added to each potential; they sum to zero.
    pub shifts: Vec<f64>,
    /// `max |c|` over the product.
    pub cost_sup: f64,
}

/// Shifts a c-convex family so that `sup fᵢ = ‖c‖∞` for `i ≥ 2`, with the
/// first potential absorbing the negated total.
pub fn normalize_potentials(pots: &MultiPotentials, cost: &MultiCost) -> Result<Normalized> {
    let supports = pots.f.iter().map(|m| m.points().to_vec()).collect();
    let pc = ProductCost::new(supports, cost)?;
    let f = pc.values_of(pots)?;
    let residual = pc.fixed_point_residual(&f);
    if residual > FIXED_POINT_TOL {
        return Err(Error::NotAFixedPoint { residual });
    }
    let m = pc.sup_norm();
    let mut shifts: Vec<f64> = f
        .iter()
        .map(|fi| m - fi.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    shifts[0] = -shifts[1..].iter().sum::<f64>();
    let shifted = f
        .iter()
        .zip(&shifts)
        .map(|(fi, h)| fi.iter().map(|v| v + h).collect())
        .collect();
    Ok(Normalized {
        potentials: pc.to_maps(shifted)?,
        shifts,
        cost_sup: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::kantorovich_primal;

    fn line(xs: &[f64], ws: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::on_line(xs, ws).unwrap()
    }

    fn pairwise_abs() -> MultiCost {
        MultiCost::PairwiseSum {
            cost: CostSpec::euclidean(),
        }
    }

    fn pts(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::scalar(x)).collect()
    }

    #[test]
    fn all_diracs() {
        let ms = vec![line(&[0.0], &[1.0]), line(&[1.0], &[1.0]), line(&[3.0], &[1.0])];
        let (_, v) = multimarginal_primal(&ms, &pairwise_abs()).unwrap();
        let (_, d) = multimarginal_dual(&ms, &pairwise_abs()).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
        assert!((d - 6.0).abs() < 1e-12);
    }

    #[test]
    fn three_uniform_marginals() {
        let u = line(&[0.0, 1.0], &[0.5, 0.5]);
        let ms = vec![u.clone(), u.clone(), u];
        let (_, v) = multimarginal_primal(&ms, &pairwise_abs()).unwrap();
        let (_, d) = multimarginal_dual(&ms, &pairwise_abs()).unwrap();
        assert!(v.abs() < 1e-12 && d.abs() < 1e-12);
    }

    #[test]
    fn forced_instance() {
        let ms = vec![
            line(&[0.0, 1.0], &[0.5, 0.5]),
            line(&[0.0], &[1.0]),
            line(&[1.0], &[1.0]),
        ];
        let (_, v) = multimarginal_primal(&ms, &pairwise_abs()).unwrap();
        let (pots, d) = multimarginal_dual(&ms, &pairwise_abs()).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!((d - 2.0).abs() < 1e-12);
        assert_eq!(pots.f.len(), 3);
    }

    #[test]
    fn two_marginals_match_kantorovich() {
        let (a, b) = (line(&[0.0, 2.0], &[0.5, 0.5]), line(&[1.0, 3.0], &[0.5, 0.5]));
        let (_, v) = multimarginal_primal(&[a.clone(), b.clone()], &pairwise_abs()).unwrap();
        let (_, w) = kantorovich_primal(&a, &b, &CostSpec::euclidean()).unwrap();
        assert!((v - w).abs() < 1e-12);
    }

    #[test]
    fn product_guard() {
        let big: Vec<Point> = (0..101).map(|i| Point::scalar(i as f64)).collect();
        let r = ProductCost::new(vec![big.clone(), big.clone(), big], &pairwise_abs());
        assert!(matches!(r, Err(Error::ProductTooLarge { .. })));
    }

    #[test]
    fn convexify_two_point_example() {
        let supports = vec![pts(&[0.0, 1.0]), pts(&[0.0, 1.0])];
        let partial = vec![
            PointMap::new(pts(&[0.0]), vec![1.0]).unwrap(),
            PointMap::new(pts(&[1.0]), vec![0.0]).unwrap(),
        ];
        let out = multi_c_convexify(&partial, &pairwise_abs(), &supports).unwrap();
        assert_eq!(out.f[0].values(), &[1.0, 0.0]);
        assert_eq!(out.f[1].values(), &[-1.0, 0.0]);

        let norm = normalize_potentials(&out, &pairwise_abs()).unwrap();
        assert!(norm.shifts.iter().sum::<f64>().abs() < 1e-12);
        for f in &norm.potentials.f {
            assert!(f.sup_norm() <= 3.0 + 1e-9);
        }
    }

    #[test]
    fn convexify_rejects_infeasible_input() {
        let supports = vec![pts(&[0.0, 1.0]), pts(&[0.0, 1.0])];
        let partial = vec![
            PointMap::new(pts(&[0.0]), vec![2.0]).unwrap(),
            PointMap::new(pts(&[1.0]), vec![0.0]).unwrap(),
        ];
        let r = multi_c_convexify(&partial, &pairwise_abs(), &supports);
        assert!(matches!(r, Err(Error::InfeasibleInput { .. })));
    }

    #[test]
    fn seeded_sums_to_cost_at_seed() {
        let supports = vec![pts(&[0.0, 1.0, 2.0]), pts(&[0.0, 2.0]), pts(&[-1.0, 1.0])];
        let seed = pts(&[1.0, 2.0, -1.0]);
        let out = multi_c_convexify_seeded(&seed, &pairwise_abs(), &supports).unwrap();
        let s: f64 = out.f.iter().zip(&seed).map(|(f, p)| f.get(p).unwrap()).sum();
        assert!((s - 6.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_undoes_offsets() {
        let supports = vec![pts(&[0.0, 1.0]), pts(&[0.0, 1.0])];
        let shifted = MultiPotentials {
            f: vec![
                PointMap::new(supports[0].clone(), vec![101.0, 100.0]).unwrap(),
                PointMap::new(supports[1].clone(), vec![-101.0, -100.0]).unwrap(),
            ],
        };
        let norm = normalize_potentials(&shifted, &pairwise_abs()).unwrap();
        for f in &norm.potentials.f {
            assert!(f.sup_norm() <= 3.0 + 1e-9);
        }
        let not_fixed = MultiPotentials {
            f: vec![
                PointMap::new(supports[0].clone(), vec![-1.0, -1.0]).unwrap(),
                PointMap::new(supports[1].clone(), vec![0.0, 0.0]).unwrap(),
            ],
        };
        assert!(matches!(
            normalize_potentials(&not_fixed, &pairwise_abs()),
            Err(Error::NotAFixedPoint { .. })
        ));
    }
}

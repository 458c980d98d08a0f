use serde::{Deserialize, Serialize};

use crate::convex_order::{max_affine, AffinePiece};
use crate::error::{Error, Result};
use crate::measures::{check_dim, dot, norm, sub, CostSpec, Point, PointMap};

/// Atom `(y, a, b)` of a B-class supremum `x ↦ b − c(y,x) + ⟨a, x − y⟩`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BAtom {
    pub y: Point,
    pub a: Vec<f64>,
    pub b: f64,
}

/// Real function on a domain, either tabulated or in closed form.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionEvaluator {
    /// Values at finitely many points; evaluation elsewhere is an error.
    Samples(PointMap<f64>),
    /// `xᵀQx + bᵀx + c`, with `Q = I` when omitted and `b = 0` when omitted.
    Quadratic {
        #[serde(default)]
        q: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        b: Option<Vec<f64>>,
        #[serde(default)]
        c: f64,
    },
    /// `−‖x‖²`.
    NegQuadratic,
    /// `‖x‖`.
    AbsNorm,
    MaxAffine { pieces: Vec<AffinePiece> },
    BclassSup { atoms: Vec<BAtom>, cost: CostSpec },
}

impl FunctionEvaluator {
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        match self {
            FunctionEvaluator::Samples(map) => map.try_get(x).copied(),
            FunctionEvaluator::Quadratic { q, b, c } => {
                let quad = match q {
                    None => dot(x, x),
                    Some(q) => {
                        check_dim(x.len(), q.len())?;
                        let mut s = 0.0;
                        for (row, xi) in q.iter().zip(x) {
                            check_dim(x.len(), row.len())?;
                            s += xi * dot(row, x);
                        }
                        s
                    }
                };
                let lin = match b {
                    None => 0.0,
                    Some(b) => {
                        check_dim(x.len(), b.len())?;
                        dot(b, x)
                    }
                };
                Ok(quad + lin + c)
            }
            FunctionEvaluator::NegQuadratic => Ok(-dot(x, x)),
            FunctionEvaluator::AbsNorm => Ok(norm(x)),
            FunctionEvaluator::MaxAffine { pieces } => {
                if pieces.is_empty() {
                    return Err(Error::Empty("max_affine has no pieces".into()));
                }
                for p in pieces {
                    check_dim(x.len(), p.slope.len())?;
                }
                Ok(max_affine(pieces, x))
            }
            FunctionEvaluator::BclassSup { atoms, cost } => {
                if atoms.is_empty() {
                    return Err(Error::Empty("bclass_sup has no atoms".into()));
                }
                let mut best = f64::NEG_INFINITY;
                for at in atoms {
                    check_dim(x.len(), at.y.dim())?;
                    check_dim(x.len(), at.a.len())?;
                    let shift = sub(x, &at.y);
                    best = best.max(at.b - cost.evaluate(&at.y, x)? + dot(&at.a, &shift));
                }
                Ok(best)
            }
        }
    }

    /// Tabulates the function on `points`.
    pub fn sample(&self, points: &[Point]) -> Result<PointMap<f64>> {
        let values = points
            .iter()
            .map(|p| self.evaluate(p))
            .collect::<Result<Vec<f64>>>()?;
        PointMap::new(points.to_vec(), values)
    }

    pub fn negated(&self) -> NegatedEvaluator<'_> {
        NegatedEvaluator(self)
    }
}

/// `−f` for a borrowed evaluator.
pub struct NegatedEvaluator<'a>(&'a FunctionEvaluator);

impl NegatedEvaluator<'_> {
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.0.evaluate(x).map(|v| -v)
    }
}

/// Modulus `σ` of uniform convexity or smoothness.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulusSpec {
    /// `σ(t) = scale · t^p`.
    Power {
        p: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Zero,
    /// Piecewise-linear through `(t[i], sigma[i])` with `t[0] = 0`, `sigma[0] = 0`,
    /// extended linearly past the last node.
    Custom {
        t: Vec<f64>,
        sigma: Vec<f64>,
        #[serde(default)]
        lipschitz: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl ModulusSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModulusSpec::Power { p, scale } => {
                if !(p.is_finite() && *p > 0.0 && scale.is_finite()) {
                    return Err(Error::Invalid(format!("power modulus p={p}, scale={scale}")));
                }
            }
            ModulusSpec::Zero => {}
            ModulusSpec::Custom { t, sigma, .. } => {
                if t.len() < 2 || t.len() != sigma.len() {
                    return Err(Error::Invalid(
                        "custom modulus needs at least two (t, sigma) nodes".into(),
                    ));
                }
                if t[0] != 0.0 || sigma[0] != 0.0 {
                    return Err(Error::Invalid("custom modulus must start at (0, 0)".into()));
                }
                if t.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Invalid("custom modulus nodes must increase".into()));
                }
                if sigma.iter().chain(t).any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("custom modulus node".into()));
                }
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        match self {
            ModulusSpec::Power { p, scale } => scale * t.powf(*p),
            ModulusSpec::Zero => 0.0,
            ModulusSpec::Custom { t: ts, sigma, .. } => {
                let k = ts.partition_point(|&s| s <= t).clamp(1, ts.len() - 1);
                let (t0, t1, s0, s1) = (ts[k - 1], ts[k], sigma[k - 1], sigma[k]);
                s0 + (s1 - s0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// `Λ` with `|σ(t)| ≤ Λ t` on `[0, diam]`, when one is known.
    pub fn growth_on(&self, diam: f64) -> Option<f64> {
        match self {
            ModulusSpec::Power { p, scale } if *p >= 1.0 => Some(scale.abs() * diam.powf(p - 1.0)),
            ModulusSpec::Power { .. } => None,
            ModulusSpec::Zero => Some(0.0),
            ModulusSpec::Custom { t, sigma, lipschitz } => lipschitz.or_else(|| {
                let slopes = t.windows(2).zip(sigma.windows(2)).map(|(tw, sw)| {
                    ((sw[1] - sw[0]) / (tw[1] - tw[0])).abs()
                });
                Some(slopes.fold(0.0, f64::max))
            }),
        }
    }
}

/// Region sampled by the simplex and triangle-inequality checkers.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Finite { points: Vec<Point> },
}

impl Domain {
    pub fn interval(lower: f64, upper: f64) -> Self {
        Domain::Box {
            lower: vec![lower],
            upper: vec![upper],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            Domain::Finite { points } => points.first().map_or(0, Point::dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Box { lower, upper } => {
                check_dim(lower.len(), upper.len())?;
                if lower.is_empty() {
                    return Err(Error::Invalid("box domain has dimension 0".into()));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
                    return Err(Error::Invalid("box bounds must be finite with lower <= upper".into()));
                }
            }
            Domain::Finite { points } => {
                if points.is_empty() {
                    return Err(Error::Empty("finite domain".into()));
                }
                let d = points[0].dim();
                for p in points {
                    check_dim(d, p.dim())?;
                }
            }
        }
        Ok(())
    }
}

/// Regular grid on a box, `counts[i] ≥ 2` nodes along axis `i` including both ends.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxGrid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

impl BoxGrid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        check_dim(lower.len(), counts.len())?;
        if lower.is_empty() {
            return Err(Error::Invalid("grid has dimension 0".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u)) {
            return Err(Error::Invalid("grid bounds must be finite with lower < upper".into()));
        }
        if counts.iter().any(|&c| c < 2) {
            return Err(Error::Invalid("every grid axis needs at least two nodes".into()));
        }
        Ok(BoxGrid {
            lower,
            upper,
            counts,
        })
    }

    /// Grid with spacing as close to `step` as the box allows.
    pub fn with_step(lower: Vec<f64>, upper: Vec<f64>, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Invalid(format!("grid step {step}")));
        }
        let counts = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| ((u - l) / step).round().max(1.0) as usize + 1)
            .collect();
        BoxGrid::new(lower, upper, counts)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        let n = self.counts[axis] - 1;
        if i == n {
            self.upper[axis]
        } else {
            self.lower[axis] + (self.upper[axis] - self.lower[axis]) * i as f64 / n as f64
        }
    }

    /// Nodes in row-major order (last axis fastest).
    pub fn points(&self) -> Vec<Point> {
        let total: usize = self.counts.iter().product();
        (0..total)
            .map(|mut flat| {
                let mut c = vec![0.0; self.dim()];
                for axis in (0..self.dim()).rev() {
                    c[axis] = self.coord(axis, flat % self.counts[axis]);
                    flat /= self.counts[axis];
                }
                Point::new(c).expect("finite grid node")
            })
            .collect()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.counts[axis] - 1) as f64
    }

    pub fn diameter(&self) -> f64 {
        let d: Vec<f64> = self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect();
        norm(&d)
    }

    /// Whether `y` lies on every bounding face that contains `x`.
    pub fn same_face(&self, x: &[f64], y: &[f64]) -> bool {
        (0..self.dim()).all(|a| {
            (x[a] != self.lower[a] || y[a] == self.lower[a])
                && (x[a] != self.upper[a] || y[a] == self.upper[a])
        })
    }

    pub fn domain(&self) -> Domain {
        Domain::Box {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let q = FunctionEvaluator::Quadratic {
            q: None,
            b: Some(vec![1.0, 0.0]),
            c: 2.0,
        };
        assert_eq!(q.evaluate(&[1.0, 2.0]).unwrap(), 8.0);
        assert_eq!(FunctionEvaluator::NegQuadratic.evaluate(&[3.0]).unwrap(), -9.0);
        assert_eq!(FunctionEvaluator::AbsNorm.evaluate(&[3.0, 4.0]).unwrap(), 5.0);
        let f: FunctionEvaluator = serde_json::from_str(
            r#"{"kind":"max_affine","pieces":[{"slope":[1],"intercept":0},{"slope":[-1],"intercept":0}]}"#,
        )
        .unwrap();
        assert_eq!(f.evaluate(&[-2.0]).unwrap(), 2.0);
    }

    #[test]
    fn moduli() {
        let s = ModulusSpec::Power { p: 2.0, scale: 1.0 };
        assert_eq!(s.evaluate(3.0), 9.0);
        assert_eq!(s.growth_on(2.0), Some(2.0));
        let c = ModulusSpec::Custom {
            t: vec![0.0, 1.0, 2.0],
            sigma: vec![0.0, 1.0, 4.0],
            lipschitz: None,
        };
        c.validate().unwrap();
        assert_eq!(c.evaluate(0.5), 0.5);
        assert_eq!(c.evaluate(1.5), 2.5);
        assert_eq!(c.evaluate(3.0), 7.0);
        assert_eq!(c.growth_on(2.0), Some(3.0));
    }

    #[test]
    fn grid_nodes_and_faces() {
        let g = BoxGrid::with_step(vec![-1.0], vec![1.0], 0.5).unwrap();
        let xs: Vec<f64> = g.points().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let sq = BoxGrid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![2, 3]).unwrap();
        assert_eq!(sq.points().len(), 6);
        assert!(sq.same_face(&[0.0, 0.5], &[0.0, 1.0]));
        assert!(!sq.same_face(&[0.0, 0.5], &[1.0, 0.5]));
        assert!(sq.same_face(&[0.5, 0.5], &[1.0, 0.0]));
    }
}

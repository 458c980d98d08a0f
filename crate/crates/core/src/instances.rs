//! Seeded generators for random test instances.
//!
//! A mean-preserving spread picks an atom `p` of mass `w` uniformly at random,
//! draws an offset `v` with coordinates uniform in `±[min_offset, max_offset]`,
//! and replaces `p` by `p + v` and `p − v` with mass `w / 2` each. Applying
//! spreads to `μ` yields `ν` with `μ ≼ ν` in convex order.

use rand::Rng;

use crate::measures::{DiscreteMeasure, Point};

const MIN_OFFSET: f64 = 0.25;
const MAX_OFFSET: f64 = 1.0;

pub fn random_point<R: Rng>(rng: &mut R, dim: usize, half_width: f64) -> Point {
    Point::new((0..dim).map(|_| rng.random_range(-half_width..half_width)).collect())
        .expect("finite coordinates")
}

/// Measure with `atoms` points uniform in `[-half_width, half_width]^dim` and
/// weights drawn uniformly from `[0.1, 1]` before normalization.
pub fn random_measure<R: Rng>(rng: &mut R, dim: usize, atoms: usize, half_width: f64) -> DiscreteMeasure {
    let points: Vec<(Point, f64)> = (0..atoms)
        .map(|_| (random_point(rng, dim, half_width), rng.random_range(0.1..1.0)))
        .collect();
    let total: f64 = points.iter().map(|(_, w)| w).sum();
    DiscreteMeasure::from_atoms_merged(
        dim,
        points.into_iter().map(|(p, w)| (p, w / total)).collect(),
    )
    .expect("valid random measure")
}

/// Same as [`random_measure`] on the integer lattice `{-r, …, r}^dim`, so that
/// repeated draws merge.
pub fn random_lattice_measure<R: Rng>(rng: &mut R, dim: usize, atoms: usize, r: i32) -> DiscreteMeasure {
    let points: Vec<(Point, f64)> = (0..atoms)
        .map(|_| {
            let p = (0..dim).map(|_| rng.random_range(-r..=r) as f64).collect();
            (Point::new(p).expect("finite"), rng.random_range(0.1..1.0))
        })
        .collect();
    let total: f64 = points.iter().map(|(_, w)| w).sum();
    DiscreteMeasure::from_atoms_merged(
        dim,
        points.into_iter().map(|(p, w)| (p, w / total)).collect(),
    )
    .expect("valid random measure")
}

/// Applies `spreads` mean-preserving spreads to `m`.
pub fn mean_preserving_spread<R: Rng>(rng: &mut R, m: &DiscreteMeasure, spreads: usize) -> DiscreteMeasure {
    let dim = m.dim();
    let mut atoms: Vec<(Point, f64)> = m.atoms().map(|(p, w)| (p.clone(), w)).collect();
    for _ in 0..spreads {
        let i = rng.random_range(0..atoms.len());
        let (p, w) = atoms.swap_remove(i);
        let v: Vec<f64> = (0..dim)
            .map(|_| {
                let mag = rng.random_range(MIN_OFFSET..MAX_OFFSET);
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        let plus = p.iter().zip(&v).map(|(a, b)| a + b).collect();
        let minus = p.iter().zip(&v).map(|(a, b)| a - b).collect();
        atoms.push((Point::new(plus).expect("finite"), w / 2.0));
        atoms.push((Point::new(minus).expect("finite"), w / 2.0));
    }
    DiscreteMeasure::from_atoms_merged(dim, atoms).expect("spread keeps a probability measure")
}

/// `(μ, ν)` with `μ` random on `base_atoms` points and `ν` obtained by `spreads`
/// mean-preserving spreads.
pub fn convex_order_pair<R: Rng>(
    rng: &mut R,
    dim: usize,
    base_atoms: usize,
    spreads: usize,
) -> (DiscreteMeasure, DiscreteMeasure) {
    let mu = random_measure(rng, dim, base_atoms, 2.0);
    let nu = mean_preserving_spread(rng, &mu, spreads);
    (mu, nu)
}

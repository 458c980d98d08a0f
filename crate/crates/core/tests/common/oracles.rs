//! Brute-force references. None of these call into the solvers they check.

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Best vertex of `{x ≥ 0, A x ≤ b}` for `max cᵀx`, by enumerating every basis
/// subsystem. Returns `None` when the polyhedron has no vertex (empty).
/// Optional `box_bound` adds `x_j ≤ box_bound` rows.
pub fn vertex_enumeration_max(
    c: &[f64],
    a: &[Vec<f64>],
    b: &[f64],
    box_bound: Option<f64>,
) -> Option<f64> {
    let n = c.len();
    let mut rows: Vec<Vec<f64>> = a.to_vec();
    let mut rhs: Vec<f64> = b.to_vec();
    for j in 0..n {
        let mut r = vec![0.0; n];
        r[j] = -1.0;
        rows.push(r);
        rhs.push(0.0);
        if let Some(u) = box_bound {
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            rows.push(r);
            rhs.push(u);
        }
    }
    let mut best: Option<f64> = None;
    for subset in combinations(rows.len(), n) {
        let sys: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].clone()).collect();
        let sys_rhs: Vec<f64> = subset.iter().map(|&i| rhs[i]).collect();
        let Some(x) = gauss_solve(sys, sys_rhs) else {
            continue;
        };
        let feasible = rows.iter().zip(&rhs).all(|(r, h)| {
            let lhs: f64 = r.iter().zip(&x).map(|(p, q)| p * q).sum();
            lhs <= h + 1e-9
        });
        if feasible {
            let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
            best = Some(best.map_or(v, |bv: f64| bv.max(v)));
        }
    }
    best
}

use choquet::measures::{CostSpec, DiscreteMeasure, Point};

/// `½ Σ |a(x) − b(x)|` over atom lists, merging by exact coordinates.
pub fn tv_distance(a: &[(Vec<f64>, f64)], b: &[(Vec<f64>, f64)]) -> f64 {
    let mut keys: Vec<Vec<f64>> = Vec::new();
    let mut diff: Vec<f64> = Vec::new();
    let mut add = |p: &Vec<f64>, w: f64| match keys.iter().position(|k| k == p) {
        Some(i) => diff[i] += w,
        None => {
            keys.push(p.clone());
            diff.push(w);
        }
    };
    for (p, w) in a {
        add(p, *w);
    }
    for (p, w) in b {
        add(p, -*w);
    }
    0.5 * diff.iter().map(|d| d.abs()).sum::<f64>()
}

pub fn atoms_of(m: &DiscreteMeasure) -> Vec<(Vec<f64>, f64)> {
    m.atoms().map(|(p, w)| (p.to_vec(), w)).collect()
}

/// Largest `φ(x) − ψ(y) − c(x,y)` over the product support.
pub fn max_dual_violation(phi: &[f64], mu: &DiscreteMeasure, psi: &[f64], nu: &DiscreteMeasure, cost: &CostSpec) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (i, x) in mu.points().iter().enumerate() {
        for (j, y) in nu.points().iter().enumerate() {
            worst = worst.max(phi[i] - psi[j] - cost.evaluate(x, y).unwrap());
        }
    }
    worst
}

/// Excess of the martingale triangle inequality at one tuple.
pub fn mti_excess(cost: &CostSpec, base: &Point, atoms: &[Point], lambdas: &[f64]) -> f64 {
    let dim = base.dim();
    let mut bar = vec![0.0; dim];
    for (a, l) in atoms.iter().zip(lambdas) {
        for d in 0..dim {
            bar[d] += l * a[d];
        }
    }
    let mut e = -cost.evaluate(base, &bar).unwrap();
    for (a, l) in atoms.iter().zip(lambdas) {
        e += l * (cost.evaluate(base, a).unwrap() - cost.evaluate(&bar, a).unwrap());
    }
    e
}

/// Smallest singular value proxy: determinant-free affine independence test via
/// Gram–Schmidt on `xᵢ − x₁`; returns the smallest residual norm.
pub fn affine_independence_margin(atoms: &[Point]) -> f64 {
    if atoms.len() < 2 {
        return f64::INFINITY;
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut margin = f64::INFINITY;
    for a in &atoms[1..] {
        let mut v: Vec<f64> = a.iter().zip(atoms[0].iter()).map(|(p, q)| p - q).collect();
        for b in &basis {
            let proj: f64 = v.iter().zip(b).map(|(p, q)| p * q).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= proj * bi;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        margin = margin.min(n);
        if n == 0.0 {
            return 0.0;
        }
        basis.push(v.iter().map(|x| x / n).collect());
    }
    margin
}

use nalgebra::{DMatrix, DVector};

use super::{Bound, LinearProgram, LpSolution, LpStatus, Relation, Sense, SolverConfig};
use crate::error::{Error, Result};

/// Smallest entry accepted when pivoting a zero-level artificial out of the basis.
const DRIVE_OUT_TOL: f64 = 1e-8;
/// Ratio-test entries below this fraction of the entering column's largest entry are
/// treated as zero.
const RELATIVE_PIVOT_TOL: f64 = 1e-9;
/// Relative objective decrease that ends a degenerate run.
const PROGRESS_TOL: f64 = 1e-12;
/// Pivots between tableau reinversions, at least; the interval grows to `3m`.
const MIN_REINVERT_INTERVAL: usize = 150;

/// Standard form `min cᵀz, A z = b, z ≥ 0, b ≥ 0` of a [`LinearProgram`].
struct StandardForm {
    m: usize,
    /// Structural plus slack columns (artificials are appended in the tableau).
    n: usize,
    /// Row-major `m × n`.
    a: Vec<f64>,
    b: Vec<f64>,
    cost: Vec<f64>,
    /// Original variable and sign for each structural column.
    structural: Vec<(usize, f64)>,
    /// `±1` applied to each original row to make its rhs nonnegative.
    row_sign: Vec<f64>,
    /// Column that can start in the basis for each row, if any.
    unit_col: Vec<Option<usize>>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.constraints.len();
        let sense = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut structural = Vec::new();
        for (j, b) in lp.bounds.iter().enumerate() {
            structural.push((j, 1.0));
            if *b == Bound::Free {
                structural.push((j, -1.0));
            }
        }
        let n_struct = structural.len();
        let n_slack = lp
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let n = n_struct + n_slack;

        let mut a = vec![0.0; m * n];
        let mut b = vec![0.0; m];
        let mut row_sign = vec![1.0; m];
        let mut unit_col = vec![None; m];
        let mut slack = n_struct;
        for (i, c) in lp.constraints.iter().enumerate() {
            let s = if c.rhs < 0.0 { -1.0 } else { 1.0 };
            row_sign[i] = s;
            b[i] = s * c.rhs;
            let row = &mut a[i * n..(i + 1) * n];
            for (k, &(j, sign)) in structural.iter().enumerate() {
                row[k] = s * sign * c.coeffs[j];
            }
            let slack_coef = match c.relation {
                Relation::Le => 1.0,
                Relation::Ge => -1.0,
                Relation::Eq => 0.0,
            };
            if slack_coef != 0.0 {
                row[slack] = s * slack_coef;
                if s * slack_coef > 0.0 {
                    unit_col[i] = Some(slack);
                }
                slack += 1;
            }
        }
        let mut cost = vec![0.0; n];
        for (k, &(j, sign)) in structural.iter().enumerate() {
            cost[k] = sense * sign * lp.objective[j];
        }
        StandardForm {
            m,
            n,
            a,
            b,
            cost,
            structural,
            row_sign,
            unit_col,
        }
    }
}

/// Dense tableau `B⁻¹[A | I_art | b]` with its reduced-cost row.
struct Tableau {
    m: usize,
    /// Total columns excluding rhs: structural + slack + artificial.
    width: usize,
    n_real: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    reduced: Vec<f64>,
    objective: f64,
    /// Starting unit column of each row.
    start_col: Vec<usize>,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn new(sf: &StandardForm) -> Self {
        let m = sf.m;
        let n_art = sf.unit_col.iter().filter(|c| c.is_none()).count();
        let width = sf.n + n_art;
        let stride = width + 1;
        let mut data = vec![0.0; m * stride];
        let mut basis = vec![0; m];
        let mut start_col = vec![0; m];
        let mut art = sf.n;
        for i in 0..m {
            let row = &mut data[i * stride..(i + 1) * stride];
            row[..sf.n].copy_from_slice(&sf.a[i * sf.n..(i + 1) * sf.n]);
            row[width] = sf.b[i];
            let col = match sf.unit_col[i] {
                Some(c) => c,
                None => {
                    row[art] = 1.0;
                    art += 1;
                    art - 1
                }
            };
            basis[i] = col;
            start_col[i] = col;
        }
        let mut in_basis = vec![false; width];
        for &c in &basis {
            in_basis[c] = true;
        }
        Tableau {
            m,
            width,
            n_real: sf.n,
            data,
            basis,
            in_basis,
            reduced: vec![0.0; width],
            objective: 0.0,
            start_col,
            iterations: 0,
        }
    }

    fn stride(&self) -> usize {
        self.width + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.stride() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.stride() + self.width]
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n_real
    }

    /// Recomputes reduced costs and objective for column costs `cost`.
    fn price(&mut self, cost: &[f64]) {
        let stride = self.stride();
        self.reduced.copy_from_slice(cost);
        self.objective = 0.0;
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.data[i * stride..(i + 1) * stride];
            for (r, t) in self.reduced.iter_mut().zip(row) {
                *r -= cb * t;
            }
            self.objective += cb * row[self.width];
        }
        for &c in &self.basis {
            self.reduced[c] = 0.0;
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let stride = self.stride();
        let p = self.at(r, e);
        let mut pivot_row: Vec<f64> = self.data[r * stride..(r + 1) * stride].to_vec();
        for v in pivot_row.iter_mut() {
            *v /= p;
        }
        pivot_row[e] = 1.0;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.data[i * stride + e];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * stride..(i + 1) * stride];
            for (v, pr) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            row[e] = 0.0;
        }
        let f = self.reduced[e];
        if f != 0.0 {
            for (v, pr) in self.reduced.iter_mut().zip(&pivot_row[..self.width]) {
                *v -= f * pr;
            }
            self.objective += f * pivot_row[self.width];
            self.reduced[e] = 0.0;
        }
        self.data[r * stride..(r + 1) * stride].copy_from_slice(&pivot_row);
        self.in_basis[self.basis[r]] = false;
        self.in_basis[e] = true;
        self.basis[r] = e;
        self.iterations += 1;
    }

    /// Bland's rule for the entering column: the lowest-index improving one. The leaving
    /// row is the largest pivot among minimum-ratio rows, falling back to Bland's
    /// lowest-index choice after `2m` consecutive degenerate pivots.
    fn run(
        &mut self,
        sf: &StandardForm,
        cost: &[f64],
        config: &SolverConfig,
        allow_artificial: bool,
    ) -> Result<Outcome> {
        let interval = (3 * self.m).max(MIN_REINVERT_INTERVAL);
        let stall_limit = 2 * self.m;
        let mut since = 0;
        let mut stalled = 0;
        loop {
            if since >= interval {
                self.reinvert(sf, cost);
                since = 0;
            }
            if self.iterations >= config.max_iterations {
                return Err(Error::NumericalBreakdown(format!(
                    "iteration limit {} reached",
                    config.max_iterations
                )));
            }
            let entering = (0..self.width).find(|&j| {
                !self.in_basis[j]
                    && (allow_artificial || !self.is_artificial(j))
                    && self.reduced[j] < -config.opt_tol
            });
            let Some(e) = entering else {
                return Ok(Outcome::Optimal);
            };
            let col_max = (0..self.m).fold(0.0f64, |m, i| m.max(self.at(i, e).abs()));
            let floor = config.pivot_tol.max(RELATIVE_PIVOT_TOL * col_max);
            let ratios: Vec<(usize, f64, f64)> = (0..self.m)
                .filter_map(|i| {
                    let t = self.at(i, e);
                    (t > floor).then(|| (i, self.rhs(i).max(0.0) / t, t))
                })
                .collect();
            let Some(theta) = ratios.iter().map(|&(_, q, _)| q).min_by(f64::total_cmp) else {
                return Ok(Outcome::Unbounded);
            };
            let tied = ratios
                .iter()
                .filter(|&&(_, q, _)| q - theta <= 1e-12 * (1.0 + theta));
            // Strict Bland once a degenerate run stalls; otherwise the largest pivot
            // among tied rows, which keeps the basis well conditioned.
            let bland = stalled >= stall_limit;
            let (r, ..) = *tied
                .min_by(|a, b| {
                    let by_index = self.basis[a.0].cmp(&self.basis[b.0]);
                    if bland {
                        by_index
                    } else {
                        b.2.total_cmp(&a.2).then(by_index)
                    }
                })
                .expect("theta comes from some row");
            if config.verbose {
                self.dump(e, r);
            }
            let before = self.objective;
            self.pivot(r, e);
            since += 1;
            if before - self.objective > PROGRESS_TOL * (1.0 + before.abs()) {
                stalled = 0;
            } else {
                stalled += 1;
            }
        }
    }

    /// Rebuilds `B⁻¹[A | I_art | b]` from the original data and reprices, discarding
    /// the round-off accumulated by successive pivots. Keeps the tableau as is when the
    /// basis matrix is singular.
    fn reinvert(&mut self, sf: &StandardForm, cost: &[f64]) {
        let m = self.m;
        if m == 0 {
            return;
        }
        let Some(inv) = basis_matrix(sf, self).lu().try_inverse() else {
            return;
        };
        let stride = self.stride();
        let mut full = DMatrix::<f64>::zeros(m, stride);
        for i in 0..m {
            full.view_mut((i, 0), (1, sf.n))
                .copy_from_slice(&sf.a[i * sf.n..(i + 1) * sf.n]);
            full[(i, self.width)] = sf.b[i];
        }
        for (i, &c) in self.start_col.iter().enumerate() {
            if c >= sf.n {
                full[(i, c)] = 1.0;
            }
        }
        let fresh = inv * full;
        if fresh.iter().any(|v| !v.is_finite()) {
            return;
        }
        for i in 0..m {
            for j in 0..stride {
                self.data[i * stride + j] = fresh[(i, j)];
            }
        }
        for (i, &c) in self.basis.iter().enumerate() {
            for k in 0..m {
                self.data[k * stride + c] = if k == i { 1.0 } else { 0.0 };
            }
        }
        self.price(cost);
    }

    fn dump(&self, e: usize, r: usize) {
        eprintln!(
            "simplex iter {}: enter {e} leave {} (row {r}), objective {:.12e}",
            self.iterations, self.basis[r], self.objective
        );
        for i in 0..self.m {
            let row: Vec<String> = (0..=self.width)
                .map(|j| format!("{:9.3e}", self.at(i, j)))
                .collect();
            eprintln!("  [{}] {}", self.basis[i], row.join(" "));
        }
    }

    /// Pivots basic artificials at zero level onto real columns where possible.
    /// Rows whose entries are all below `DRIVE_OUT_TOL` are numerically redundant and
    /// keep their artificial; pivoting on such an entry amplifies round-off.
    fn drive_out_artificials(&mut self, config: &SolverConfig) {
        let tol = config.pivot_tol.max(DRIVE_OUT_TOL);
        for r in 0..self.m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n_real {
                if self.in_basis[j] {
                    continue;
                }
                let t = self.at(r, j).abs();
                if t > tol && best.is_none_or(|(_, bt)| t > bt) {
                    best = Some((j, t));
                }
            }
            if let Some((j, _)) = best {
                // The artificial sits at round-off level; pin it to zero so the pivot
                // leaves every other basic value where it is.
                let at = r * self.stride() + self.width;
                self.data[at] = 0.0;
                self.pivot(r, j);
            }
        }
    }
}

/// Column `j` of `[A | I_art]` in standard form.
fn column(sf: &StandardForm, tab: &Tableau, j: usize) -> Vec<f64> {
    if j < sf.n {
        (0..sf.m).map(|i| sf.a[i * sf.n + j]).collect()
    } else {
        let row = tab
            .start_col
            .iter()
            .position(|&c| c == j)
            .expect("artificial column starts in some row");
        let mut v = vec![0.0; sf.m];
        v[row] = 1.0;
        v
    }
}

/// Columns of `[A | I_art]` for the current basis.
fn basis_matrix(sf: &StandardForm, tab: &Tableau) -> DMatrix<f64> {
    let mut bmat = DMatrix::<f64>::zeros(sf.m, sf.m);
    for (k, &j) in tab.basis.iter().enumerate() {
        for (i, v) in column(sf, tab, j).into_iter().enumerate() {
            bmat[(i, k)] = v;
        }
    }
    bmat
}

/// Re-solves `B z_B = b` and `Bᵀ y = c_B` with an LU factorization of the final basis.
fn refine(
    sf: &StandardForm,
    tab: &Tableau,
    cost: &[f64],
) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = sf.m;
    if m == 0 {
        return Some((Vec::new(), Vec::new()));
    }
    let bmat = basis_matrix(sf, tab);
    let cb = DVector::from_iterator(m, tab.basis.iter().map(|&j| cost[j]));
    let b = DVector::from_column_slice(&sf.b);
    let zb = bmat.clone().lu().solve(&b)?;
    let y = bmat.transpose().lu().solve(&cb)?;
    if zb.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return None;
    }
    Some((zb.iter().copied().collect(), y.iter().copied().collect()))
}

/// Max violation of `A z = b, z ≥ 0` for a basic solution `zb`.
fn basic_residual(sf: &StandardForm, tab: &Tableau, zb: &[f64]) -> f64 {
    let mut r = sf.b.clone();
    let mut neg: f64 = 0.0;
    for (k, &j) in tab.basis.iter().enumerate() {
        neg = neg.max(-zb[k]);
        let col = column(sf, tab, j);
        for (ri, c) in r.iter_mut().zip(col) {
            *ri -= c * zb[k];
        }
    }
    r.iter().fold(neg, |m, v| m.max(v.abs()))
}

fn tableau_basic(tab: &Tableau) -> Vec<f64> {
    (0..tab.m).map(|i| tab.rhs(i)).collect()
}

/// Duals read off the reduced costs of the starting unit columns.
fn tableau_duals(tab: &Tableau, cost: &[f64]) -> Vec<f64> {
    tab.start_col
        .iter()
        .map(|&c| cost[c] - tab.reduced[c])
        .collect()
}

pub(super) fn solve(lp: &LinearProgram, config: &SolverConfig) -> Result<LpSolution> {
    let sf = StandardForm::build(lp);
    let mut tab = Tableau::new(&sf);
    let width = tab.width;

    // Phase one.
    let mut phase1 = vec![0.0; width];
    for c in phase1.iter_mut().skip(sf.n) {
        *c = 1.0;
    }
    let has_artificials = width > sf.n;
    if has_artificials {
        tab.price(&phase1);
        tab.run(&sf, &phase1, config, true)?;
        tab.reinvert(&sf, &phase1);
        if tab.objective > config.feas_tol {
            let y = refine(&sf, &tab, &phase1)
                .map(|(_, y)| y)
                .unwrap_or_else(|| tableau_duals(&tab, &phase1));
            let farkas = y.iter().zip(&sf.row_sign).map(|(v, s)| v * s).collect();
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                value: f64::NAN,
                primal: vec![0.0; lp.num_vars()],
                dual: vec![0.0; sf.m],
                farkas: Some(farkas),
                iterations: tab.iterations,
            });
        }
        tab.drive_out_artificials(config);
    }

    // Phase two.
    let mut phase2 = vec![0.0; width];
    phase2[..sf.n].copy_from_slice(&sf.cost);
    tab.price(&phase2);
    let mut outcome = tab.run(&sf, &phase2, config, false)?;
    if matches!(outcome, Outcome::Optimal) {
        // Confirm optimality on a freshly inverted tableau.
        tab.reinvert(&sf, &phase2);
        outcome = tab.run(&sf, &phase2, config, false)?;
    }

    let tableau_z = tableau_basic(&tab);
    let (zb, y) = match refine(&sf, &tab, &phase2) {
        Some((zb, y)) => {
            if basic_residual(&sf, &tab, &zb) <= basic_residual(&sf, &tab, &tableau_z) {
                (zb, y)
            } else {
                (tableau_z, y)
            }
        }
        // Singular basis: fall back on the tableau itself.
        None => (tableau_z, tableau_duals(&tab, &phase2)),
    };
    let residual = basic_residual(&sf, &tab, &zb);
    if residual > 1e3 * config.feas_tol {
        return Err(Error::NumericalBreakdown(format!(
            "final basis reproduces constraints only to {residual:e}"
        )));
    }

    let mut z = vec![0.0; width];
    for (k, &j) in tab.basis.iter().enumerate() {
        z[j] = zb[k].max(0.0);
    }
    let mut primal = vec![0.0; lp.num_vars()];
    for (k, &(j, sign)) in sf.structural.iter().enumerate() {
        primal[j] += sign * z[k];
    }
    let sense = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let dual: Vec<f64> = y
        .iter()
        .zip(&sf.row_sign)
        .map(|(v, s)| sense * v * s)
        .collect();
    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    let value = match status {
        LpStatus::Unbounded => match lp.sense {
            Sense::Minimize => f64::NEG_INFINITY,
            Sense::Maximize => f64::INFINITY,
        },
        _ => lp.objective_value(&primal),
    };
    Ok(LpSolution {
        status,
        value,
        primal,
        dual,
        farkas: None,
        iterations: tab.iterations,
    })
}

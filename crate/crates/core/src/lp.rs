//! Small dense linear-programming oracle.
//!
//! `solve` is a two-phase tableau simplex. Pricing is Dantzig's most-negative
//! reduced cost until the number of degenerate pivots passes
//! `bland_factor * (rows + cols)`, after which Bland's rule takes over for the rest
//! of the solve. At desk scale this is exact to the configured tolerances, which
//! the test suite checks against brute-force vertex enumeration.
//!
//! The distance helpers built on top of it (`dist_l1_to_polyhedron`,
//! `min_norm_on_face`, `dist_l2_to_halfspaces`) are the ground truth the margin and
//! theorem modules are measured against.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpTolerances {
    /// Constraint satisfaction and phase-1 infeasibility cutoff.
    pub feasibility: f64,
    /// Reduced costs above `-reduced_cost` count as nonnegative.
    pub reduced_cost: f64,
    /// Smallest tableau entry accepted as a pivot.
    pub pivot: f64,
}

impl Default for LpTolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-9,
            reduced_cost: 1e-9,
            pivot: 1e-11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpConfig {
    pub tol: LpTolerances,
    /// Largest accepted number of variables and of rows.
    pub size_limit: usize,
    /// Bland's rule engages after `bland_factor * (rows + cols)` degenerate pivots.
    pub bland_factor: usize,
    pub max_pivots: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        Self {
            tol: LpTolerances::default(),
            size_limit: 100,
            bland_factor: 50,
            max_pivots: 200_000,
        }
    }
}

/// `min c^T x` subject to `A_eq x = b_eq`, `A_ub x <= b_ub` and per-variable bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub ub_rows: Vec<Vec<f64>>,
    pub ub_rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// Standard-form column indices of the final basis.
    pub basis: Vec<usize>,
    /// Largest constraint or bound violation of `x` in the original problem.
    pub max_violation: f64,
}

impl LinearProgram {
    /// A program in `objective.len()` variables with default bounds `x >= 0`.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            ub_rows: Vec::new(),
            ub_rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.eq_rows.len() + self.ub_rows.len()
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn le(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.ub_rows.push(row);
        self.ub_rhs.push(rhs);
        self
    }

    pub fn ge(self, row: Vec<f64>, rhs: f64) -> Self {
        let neg = row.iter().map(|x| -x).collect();
        self.le(neg, -rhs)
    }

    pub fn bounds(mut self, var: usize, lower: f64, upper: f64) -> Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn free(self, var: usize) -> Self {
        self.bounds(var, f64::NEG_INFINITY, f64::INFINITY)
    }

    fn validate(&self, cfg: &LpConfig) -> Result<()> {
        let n = self.num_vars();
        if n > cfg.size_limit || self.num_rows() > cfg.size_limit {
            return Err(Error::LpTooLarge {
                vars: n,
                rows: self.num_rows(),
                limit: cfg.size_limit,
            });
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::MalformedLp("objective has non-finite entries".into()));
        }
        if self.eq_rows.len() != self.eq_rhs.len() || self.ub_rows.len() != self.ub_rhs.len() {
            return Err(Error::MalformedLp("row and rhs counts differ".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::MalformedLp("bound vectors have wrong length".into()));
        }
        for row in self.eq_rows.iter().chain(&self.ub_rows) {
            if row.len() != n {
                return Err(Error::MalformedLp(format!(
                    "row has {} coefficients, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::MalformedLp("row has non-finite entries".into()));
            }
        }
        if self.eq_rhs.iter().chain(&self.ub_rhs).any(|x| !x.is_finite()) {
            return Err(Error::MalformedLp("rhs has non-finite entries".into()));
        }
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::MalformedLp(format!("variable {j} has invalid bounds")));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut v: f64 = 0.0;
        for (row, b) in self.eq_rows.iter().zip(&self.eq_rhs) {
            v = v.max((dot(row, x) - b).abs());
        }
        for (row, b) in self.ub_rows.iter().zip(&self.ub_rhs) {
            v = v.max(dot(row, x) - b);
        }
        for ((xi, lo), hi) in x.iter().zip(&self.lower).zip(&self.upper) {
            v = v.max(lo - xi).max(xi - hi);
        }
        v
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lo + y`
    Shift { col: usize, lo: f64 },
    /// `x = hi - y`
    Flip { col: usize, hi: f64 },
    /// `x = y_pos - y_neg`
    Split { pos: usize, neg: usize },
}

/// `A y = b, y >= 0` with objective `c^T y` (constant offsets dropped).
struct StandardForm {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    map: Vec<VarMap>,
    /// For each row, a column that is a unit vector with +1 in this row, if any.
    slack_of_row: Vec<Option<usize>>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let mut ncols = 0;
        let map: Vec<VarMap> = (0..n)
            .map(|j| {
                let (lo, hi) = (lp.lower[j], lp.upper[j]);
                let m = if lo.is_finite() {
                    VarMap::Shift { col: ncols, lo }
                } else if hi.is_finite() {
                    VarMap::Flip { col: ncols, hi }
                } else {
                    ncols += 1;
                    VarMap::Split {
                        pos: ncols - 1,
                        neg: ncols,
                    }
                };
                ncols += 1;
                m
            })
            .collect();
        let structural = ncols;

        // (coefficients on structural columns, rhs, needs slack)
        let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
        let translate = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
            let mut out = vec![0.0; structural];
            let mut r = rhs;
            for (j, &a) in row.iter().enumerate() {
                match map[j] {
                    VarMap::Shift { col, lo } => {
                        out[col] += a;
                        r -= a * lo;
                    }
                    VarMap::Flip { col, hi } => {
                        out[col] -= a;
                        r -= a * hi;
                    }
                    VarMap::Split { pos, neg } => {
                        out[pos] += a;
                        out[neg] -= a;
                    }
                }
            }
            (out, r)
        };
        for (row, &rhs) in lp.eq_rows.iter().zip(&lp.eq_rhs) {
            let (r, b) = translate(row, rhs);
            rows.push((r, b, false));
        }
        for (row, &rhs) in lp.ub_rows.iter().zip(&lp.ub_rhs) {
            let (r, b) = translate(row, rhs);
            rows.push((r, b, true));
        }
        for (j, m) in map.iter().enumerate() {
            if let VarMap::Shift { col, lo } = *m {
                if lp.upper[j].is_finite() {
                    let mut r = vec![0.0; structural];
                    r[col] = 1.0;
                    rows.push((r, lp.upper[j] - lo, true));
                }
            }
        }

        let nslack = rows.iter().filter(|r| r.2).count();
        let total = structural + nslack;
        let mut a = Vec::with_capacity(rows.len());
        let mut b = Vec::with_capacity(rows.len());
        let mut slack_of_row = Vec::with_capacity(rows.len());
        let mut next_slack = structural;
        for (coef, rhs, has_slack) in rows {
            let mut full = coef;
            full.resize(total, 0.0);
            let mut slack = None;
            if has_slack {
                full[next_slack] = 1.0;
                slack = Some(next_slack);
                next_slack += 1;
            }
            if rhs < 0.0 {
                full.iter_mut().for_each(|x| *x = -*x);
                a.push(full);
                b.push(-rhs);
                slack_of_row.push(None);
            } else {
                a.push(full);
                b.push(rhs);
                slack_of_row.push(slack);
            }
        }

        let mut c = vec![0.0; total];
        for (j, &cj) in lp.objective.iter().enumerate() {
            match map[j] {
                VarMap::Shift { col, .. } => c[col] += cj,
                VarMap::Flip { col, .. } => c[col] -= cj,
                VarMap::Split { pos, neg } => {
                    c[pos] += cj;
                    c[neg] -= cj;
                }
            }
        }
        Self {
            a,
            b,
            c,
            map,
            slack_of_row,
        }
    }

    fn recover(&self, y: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .map(|m| match *m {
                VarMap::Shift { col, lo } => lo + y[col],
                VarMap::Flip { col, hi } => hi - y[col],
                VarMap::Split { pos, neg } => y[pos] - y[neg],
            })
            .collect()
    }
}

struct Tableau<'c> {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Original row index of each surviving tableau row.
    row_origin: Vec<usize>,
    obj: Vec<f64>,
    obj_val: f64,
    cfg: &'c LpConfig,
    degenerate_pivots: usize,
    pivots: usize,
    bland: bool,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Tableau<'_> {
    fn ncols(&self) -> usize {
        self.obj.len()
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.obj = cost.to_vec();
        self.obj_val = 0.0;
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = cost[bv];
            if cb != 0.0 {
                for (o, r) in self.obj.iter_mut().zip(&self.rows[i]) {
                    *o -= cb * r;
                }
                self.obj_val -= cb * self.rhs[i];
            }
        }
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        self.rows[r].iter_mut().for_each(|x| *x /= p);
        self.rhs[r] /= p;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][col];
            if f != 0.0 {
                for (x, y) in self.rows[i].iter_mut().zip(&prow) {
                    *x -= f * y;
                }
                self.rows[i][col] = 0.0;
                self.rhs[i] -= f * prhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -self.cfg.tol.feasibility {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.obj[col];
        if f != 0.0 {
            for (x, y) in self.obj.iter_mut().zip(&prow) {
                *x -= f * y;
            }
            self.obj[col] = 0.0;
            self.obj_val -= f * prhs;
        }
        self.basis[r] = col;
        self.pivots += 1;
    }

    fn run(&mut self, allowed: &[bool]) -> Result<PhaseOutcome> {
        let tol = self.cfg.tol;
        let threshold = self.cfg.bland_factor * (self.rows.len() + self.ncols());
        loop {
            if self.pivots >= self.cfg.max_pivots {
                return Err(Error::Precondition(format!(
                    "simplex exceeded {} pivots",
                    self.cfg.max_pivots
                )));
            }
            let entering = if self.bland {
                (0..self.ncols()).find(|&j| allowed[j] && self.obj[j] < -tol.reduced_cost)
            } else {
                (0..self.ncols())
                    .filter(|&j| allowed[j] && self.obj[j] < -tol.reduced_cost)
                    .fold(None, |best: Option<usize>, j| match best {
                        Some(b) if self.obj[j] >= self.obj[b] => best,
                        _ => Some(j),
                    })
            };
            let Some(col) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > tol.pivot {
                    let ratio = self.rhs[i] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-15
                                || (ratio <= br + 1e-15 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(PhaseOutcome::Unbounded);
            };
            if ratio <= tol.feasibility {
                self.degenerate_pivots += 1;
                if self.degenerate_pivots > threshold {
                    self.bland = true;
                }
            }
            self.pivot(r, col);
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    solve_with(lp, &LpConfig::default())
}

pub fn solve_with(lp: &LinearProgram, cfg: &LpConfig) -> Result<LpSolution> {
    lp.validate(cfg)?;
    let sf = StandardForm::build(lp);
    let m = sf.a.len();
    let nstd = sf.c.len();

    // columns nstd.. are artificials, one per row lacking a +1 slack
    let mut basis = Vec::with_capacity(m);
    let mut nart = 0;
    for s in &sf.slack_of_row {
        match s {
            Some(col) => basis.push(*col),
            None => {
                basis.push(nstd + nart);
                nart += 1;
            }
        }
    }
    let ntot = nstd + nart;
    let mut rows = Vec::with_capacity(m);
    let mut k = 0;
    for (i, r) in sf.a.iter().enumerate() {
        let mut full = r.clone();
        full.resize(ntot, 0.0);
        if sf.slack_of_row[i].is_none() {
            full[nstd + k] = 1.0;
            k += 1;
        }
        rows.push(full);
    }
    let mut tab = Tableau {
        rows,
        rhs: sf.b.clone(),
        basis,
        row_origin: (0..m).collect(),
        obj: vec![0.0; ntot],
        obj_val: 0.0,
        cfg,
        degenerate_pivots: 0,
        pivots: 0,
        bland: false,
    };

    let bscale = 1.0 + sf.b.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if nart > 0 {
        let mut phase1 = vec![0.0; ntot];
        phase1[nstd..].iter_mut().for_each(|c| *c = 1.0);
        tab.set_costs(&phase1);
        let all = vec![true; ntot];
        tab.run(&all)?;
        if -tab.obj_val > cfg.tol.feasibility * bscale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective_value: f64::NAN,
                basis: Vec::new(),
                max_violation: f64::NAN,
            });
        }
        // drive remaining artificials out of the basis, dropping redundant rows
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= nstd {
                let col = (0..nstd)
                    .filter(|&j| tab.rows[i][j].abs() > cfg.tol.pivot)
                    .fold(None, |best: Option<usize>, j| match best {
                        Some(b) if tab.rows[i][j].abs() <= tab.rows[i][b].abs() => best,
                        _ => Some(j),
                    });
                match col {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.rhs.remove(i);
                        tab.basis.remove(i);
                        tab.row_origin.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = sf.c.clone();
    cost.resize(ntot, 0.0);
    tab.set_costs(&cost);
    let mut allowed = vec![true; ntot];
    allowed[nstd..].iter_mut().for_each(|a| *a = false);
    tab.degenerate_pivots = 0;
    if let PhaseOutcome::Unbounded = tab.run(&allowed)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            objective_value: f64::NEG_INFINITY,
            basis: tab.basis.clone(),
            max_violation: f64::NAN,
        });
    }

    let mut y = vec![0.0; nstd];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < nstd {
            y[bv] = tab.rhs[i].max(0.0);
        }
    }
    let mut x = sf.recover(&y);
    let mut violation = lp.max_violation(&x);
    if let Some(yr) = refine_basic_solution(&sf, &tab.basis, &tab.row_origin, nstd) {
        let xr = sf.recover(&yr);
        let vr = lp.max_violation(&xr);
        if vr <= violation {
            x = xr;
            violation = vr;
        }
    }
    let objective_value = dot(&lp.objective, &x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective_value,
        basis: tab.basis.clone(),
        max_violation: violation.max(0.0),
    })
}

/// Re-solves `B y_B = b` from the untouched standard-form data to shed the rounding
/// accumulated over the pivots.
fn refine_basic_solution(
    sf: &StandardForm,
    basis: &[usize],
    rows: &[usize],
    nstd: usize,
) -> Option<Vec<f64>> {
    let m = rows.len();
    if m == 0 || basis.iter().any(|&b| b >= nstd) {
        return None;
    }
    let bmat = DMatrix::from_fn(m, m, |i, j| sf.a[rows[i]][basis[j]]);
    let rhs = DVector::from_fn(m, |i, _| sf.b[rows[i]]);
    let sol = bmat.full_piv_lu().solve(&rhs)?;
    let mut y = vec![0.0; nstd];
    for (j, &bv) in basis.iter().enumerate() {
        if !sol[j].is_finite() {
            return None;
        }
        y[bv] = sol[j].max(0.0);
    }
    Some(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub status: LpStatus,
    pub distance: f64,
    pub point: Vec<f64>,
}

/// `min ||x - x0||_1` over `{x : eq_rows x = eq_rhs, x >= 0 if nonneg}`, by the
/// split-variable LP with `u >= |x - x0|`.
pub fn dist_l1_to_polyhedron(
    x0: &[f64],
    eq_rows: &[Vec<f64>],
    eq_rhs: &[f64],
    nonneg: bool,
) -> Result<Projection> {
    let n = x0.len();
    let mut objective = vec![0.0; 2 * n];
    objective[n..].iter_mut().for_each(|c| *c = 1.0);
    let mut lp = LinearProgram::new(objective);
    for (row, &b) in eq_rows.iter().zip(eq_rhs) {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        let mut r = row.clone();
        r.resize(2 * n, 0.0);
        lp = lp.eq(r, b);
    }
    for j in 0..n {
        let mut r = vec![0.0; 2 * n];
        r[j] = 1.0;
        r[n + j] = -1.0;
        lp = lp.le(r, x0[j]);
        let mut r = vec![0.0; 2 * n];
        r[j] = -1.0;
        r[n + j] = -1.0;
        lp = lp.le(r, -x0[j]);
        if !nonneg {
            lp = lp.free(j);
        }
    }
    let sol = solve(&lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => {
            let point = sol.x[..n].to_vec();
            let distance = crate::linalg::dist1(&point, x0);
            Projection {
                status: LpStatus::Optimal,
                distance,
                point,
            }
        }
        status => Projection {
            status,
            distance: f64::INFINITY,
            point: Vec::new(),
        },
    })
}

/// `dist_1` from `p0` to `{p in simplex : eq_rows p = eq_rhs}`.
pub fn dist_l1_to_simplex_slice(
    p0: &[f64],
    eq_rows: &[Vec<f64>],
    eq_rhs: &[f64],
) -> Result<Projection> {
    let mut rows = eq_rows.to_vec();
    let mut rhs = eq_rhs.to_vec();
    rows.push(vec![1.0; p0.len()]);
    rhs.push(1.0);
    dist_l1_to_polyhedron(p0, &rows, &rhs, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceMinNorm {
    pub norm: f64,
    /// Affine weights, summing to one; entries may be negative.
    pub weights: Vec<f64>,
}

/// Relative singular-value cutoff for calling a point set affinely dependent.
pub const AFFINE_DEPENDENCE_RTOL: f64 = 1e-9;

/// Least-norm point of the affine hull of `columns`: `min ||A_S q||` subject to
/// `sum(q) = 1`, solved through the bordered system
/// `[G_S 1; 1^T 0] [q; mu] = [0; 1]`. Returns `None` for affinely dependent sets,
/// where the bordered matrix is singular.
pub fn min_norm_on_face(columns: &[&[f64]]) -> Option<FaceMinNorm> {
    let k = columns.len();
    if k == 0 {
        return None;
    }
    let d = columns[0].len();
    if k == 1 {
        return Some(FaceMinNorm {
            norm: norm(columns[0]),
            weights: vec![1.0],
        });
    }
    if k > d + 1 {
        return None;
    }
    let scale = columns.iter().map(|c| norm(c)).fold(0.0, f64::max).max(1e-300);
    let diffs = DMatrix::from_fn(d, k - 1, |i, j| columns[j + 1][i] - columns[0][i]);
    let sv = diffs.singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= AFFINE_DEPENDENCE_RTOL * scale {
        return None;
    }
    let mut m = DMatrix::zeros(k + 1, k + 1);
    for i in 0..k {
        for j in i..k {
            let g = dot(columns[i], columns[j]);
            m[(i, j)] = g;
            m[(j, i)] = g;
        }
        m[(i, k)] = 1.0;
        m[(k, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = m.full_piv_lu().solve(&rhs)?;
    let mut q: Vec<f64> = (0..k).map(|i| sol[i]).collect();
    if q.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let s: f64 = q.iter().sum();
    q.iter_mut().for_each(|x| *x /= s);
    let mut point = vec![0.0; d];
    for (c, &w) in columns.iter().zip(&q) {
        crate::linalg::axpy(&mut point, w, c);
    }
    Some(FaceMinNorm {
        norm: norm(&point),
        weights: q,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Projection {
    pub distance: f64,
    pub point: Vec<f64>,
    /// Multipliers of the active constraints (zero elsewhere); `point - w = A mu`.
    pub multipliers: Vec<f64>,
    pub active_set: Vec<usize>,
}

/// Euclidean projection of `w` onto `{y : normals[i] . y >= rhs[i]}` by exact
/// enumeration of active sets with linearly independent normals. Returns `None`
/// if no KKT point exists (empty polyhedron).
pub fn dist_l2_to_halfspaces(normals: &[Vec<f64>], rhs: &[f64], w: &[f64]) -> Option<L2Projection> {
    let n = normals.len();
    let d = w.len();
    // shift to z = y - w: normals . z >= h
    let h: Vec<f64> = normals
        .iter()
        .zip(rhs)
        .map(|(a, &c)| c - dot(a, w))
        .collect();
    let scale = 1.0 + crate::linalg::norm_inf(&h);
    let feas_tol = 1e-9 * scale;
    let feasible = |z: &[f64]| normals.iter().zip(&h).all(|(a, &hi)| dot(a, z) >= hi - feas_tol);

    let mut best: Option<L2Projection> = None;
    let mut consider = |z: Vec<f64>, mu: Vec<f64>, active: Vec<usize>| {
        let dz = norm(&z);
        if best.as_ref().is_none_or(|b| dz < b.distance - 1e-15) {
            best = Some(L2Projection {
                distance: dz,
                point: crate::linalg::add(w, &z),
                multipliers: mu,
                active_set: active,
            });
        }
    };
    if feasible(&vec![0.0; d]) {
        consider(vec![0.0; d], vec![0.0; n], Vec::new());
    }
    crate::linalg::for_each_subset(n, 1, d.min(n), |s| {
        let k = s.len();
        let a_s = DMatrix::from_fn(d, k, |i, j| normals[s[j]][i]);
        let sv = a_s.singular_values();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if smin <= 1e-10 * smax.max(1e-300) {
            return;
        }
        let g = a_s.transpose() * &a_s;
        let hs = DVector::from_fn(k, |i, _| h[s[i]]);
        let Some(mu_s) = g.lu().solve(&hs) else { return };
        if mu_s.iter().any(|&m| m < -1e-12 * scale) {
            return;
        }
        let z = &a_s * &mu_s;
        let z: Vec<f64> = z.iter().cloned().collect();
        if !feasible(&z) {
            return;
        }
        let mut mu = vec![0.0; n];
        for (j, &i) in s.iter().enumerate() {
            mu[i] = mu_s[j].max(0.0);
        }
        consider(z, mu, s.to_vec());
    });
    best
}

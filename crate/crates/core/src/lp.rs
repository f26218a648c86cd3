//! Dense revised simplex.
//!
//! Problems are stated as
//!
//! ```text
//! minimize c·x  subject to  A x = b,  G x ≤ h,  lower ≤ x ≤ upper
//! ```
//!
//! and converted internally to `min c'z, A'z = b', z ≥ 0` with one slack
//! per inequality and per finite upper bound. Phase one minimizes the sum
//! of artificials; phase two optimizes the true cost. Pricing is Dantzig's
//! rule until a run of degenerate pivots, then Bland's rule until the
//! objective strictly improves again, which rules out cycling.
//!
//! Dual multipliers are reported as sensitivities ∂(optimal value)/∂(rhs):
//! `dual_eq` is free and `dual_ub` is non-positive at an optimum. Every
//! optimal answer is re-checked against the original data (primal
//! residual, dual residual, objective gap) before it is returned.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpConfig {
    /// Primal and dual residual bound for an accepted optimum.
    pub feas_tol: f64,
    /// Bound on |primal objective − dual objective|.
    pub gap_tol: f64,
    /// Reduced costs above −opt_tol count as non-negative.
    pub opt_tol: f64,
    /// Smallest pivot element accepted in the ratio test.
    pub pivot_tol: f64,
    pub max_iters: usize,
    /// Rebuild the basis inverse from scratch this often.
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_switch: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-7,
            opt_tol: 1e-10,
            pivot_tol: 1e-9,
            max_iters: 200_000,
            refactor_every: 50,
            degenerate_switch: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    eq_rows: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
    ub_rows: Vec<Vec<f64>>,
    ub_rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LinearProgram {
    /// `min c·x` with `x ≥ 0` and no rows yet.
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

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn eq_rows(&self) -> (&[Vec<f64>], &[f64]) {
        (&self.eq_rows, &self.eq_rhs)
    }

    pub fn ub_rows(&self) -> (&[Vec<f64>], &[f64]) {
        (&self.ub_rows, &self.ub_rhs)
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    /// Adds `row·x = rhs`; returns the row index among equalities.
    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> usize {
        assert_eq!(row.len(), self.num_vars(), "equality row length");
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        self.eq_rows.len() - 1
    }

    /// Adds `row·x ≤ rhs`; returns the row index among inequalities.
    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> usize {
        assert_eq!(row.len(), self.num_vars(), "inequality row length");
        self.ub_rows.push(row);
        self.ub_rhs.push(rhs);
        self.ub_rows.len() - 1
    }

    /// Adds `row·x ≥ rhs`, stored as `−row·x ≤ −rhs`.
    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> usize {
        self.add_le(row.into_iter().map(|a| -a).collect(), -rhs)
    }

    pub fn add_eq_sparse(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        let row = self.dense(entries);
        self.add_eq(row, rhs)
    }

    pub fn add_le_sparse(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        let row = self.dense(entries);
        self.add_le(row, rhs)
    }

    fn dense(&self, entries: &[(usize, f64)]) -> Vec<f64> {
        let mut row = vec![0.0; self.num_vars()];
        for &(j, a) in entries {
            row[j] += a;
        }
        row
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn set_free(&mut self, var: usize) {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY);
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.objective) || !finite(&self.eq_rhs) || !finite(&self.ub_rhs) {
            return Err(Error::InvalidInput("non-finite LP coefficient".into()));
        }
        for row in self.eq_rows.iter().chain(&self.ub_rows) {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            if !finite(row) {
                return Err(Error::InvalidInput("non-finite LP coefficient".into()));
            }
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] == f64::INFINITY
                || self.upper[j] == f64::NEG_INFINITY
            {
                return Err(Error::InvalidInput(format!("bad bounds on variable {j}")));
            }
        }
        Ok(())
    }

    /// Objective of `x` without any feasibility check.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut r: f64 = 0.0;
        for (row, b) in self.eq_rows.iter().zip(&self.eq_rhs) {
            r = r.max((dot(row, x) - b).abs());
        }
        for (row, h) in self.ub_rows.iter().zip(&self.ub_rhs) {
            r = r.max(dot(row, x) - h);
        }
        for (j, xj) in x.iter().enumerate() {
            r = r.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        r
    }

    /// Dual objective and dual residual of sensitivity multipliers.
    pub fn dual_check(&self, dual_eq: &[f64], dual_ub: &[f64]) -> (f64, f64) {
        let mut reduced = self.objective.clone();
        let mut obj = 0.0;
        let mut resid: f64 = 0.0;
        for ((row, b), y) in self.eq_rows.iter().zip(&self.eq_rhs).zip(dual_eq) {
            obj += b * y;
            for (r, a) in reduced.iter_mut().zip(row) {
                *r -= a * y;
            }
        }
        for ((row, h), y) in self.ub_rows.iter().zip(&self.ub_rhs).zip(dual_ub) {
            obj += h * y;
            resid = resid.max(*y);
            for (r, a) in reduced.iter_mut().zip(row) {
                *r -= a * y;
            }
        }
        for (j, r) in reduced.iter().enumerate() {
            if *r > 0.0 {
                if self.lower[j].is_finite() {
                    obj += r * self.lower[j];
                } else {
                    resid = resid.max(*r);
                }
            } else if *r < 0.0 {
                if self.upper[j].is_finite() {
                    obj += r * self.upper[j];
                } else {
                    resid = resid.max(-r);
                }
            }
        }
        (obj, resid)
    }

    /// For a claimed Farkas pair (λ on equalities, ν ≤ 0 on inequalities)
    /// returns λ·b + ν·h − max over the bound box of (Aᵀλ + Gᵀν)·x. A
    /// positive margin proves the constraints have no common solution.
    pub fn farkas_margin(&self, dual_eq: &[f64], dual_ub: &[f64]) -> f64 {
        if dual_ub.iter().any(|v| *v > 0.0) {
            return f64::NEG_INFINITY;
        }
        let n = self.num_vars();
        let mut g = vec![0.0; n];
        let mut rhs = 0.0;
        for ((row, b), y) in self.eq_rows.iter().zip(&self.eq_rhs).zip(dual_eq) {
            rhs += b * y;
            for (gj, a) in g.iter_mut().zip(row) {
                *gj += a * y;
            }
        }
        for ((row, h), y) in self.ub_rows.iter().zip(&self.ub_rhs).zip(dual_ub) {
            rhs += h * y;
            for (gj, a) in g.iter_mut().zip(row) {
                *gj += a * y;
            }
        }
        let mut box_max = 0.0;
        for (j, gj) in g.iter().enumerate() {
            let gj = if gj.abs() < 1e-12 { 0.0 } else { *gj };
            if gj > 0.0 {
                box_max += gj * self.upper[j];
            } else if gj < 0.0 {
                box_max += gj * self.lower[j];
            }
        }
        rhs - box_max
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point, or the last vertex when unbounded. Empty when infeasible.
    pub x: Vec<f64>,
    pub dual_eq: Vec<f64>,
    pub dual_ub: Vec<f64>,
    pub objective_value: f64,
    pub dual_value: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// Improving direction when unbounded.
    pub ray: Option<Vec<f64>>,
    /// Phase-one multipliers (λ, ν) when infeasible; see [`LinearProgram::farkas_margin`].
    pub farkas: Option<(Vec<f64>, Vec<f64>)>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with(lp, &LpConfig::default())
}

pub fn solve_lp_with(lp: &LinearProgram, cfg: &LpConfig) -> Result<LpSolution> {
    lp.validate()?;
    let std = StdForm::build(lp);
    if let Some(j) = std.crossed_bounds {
        log::debug!("variable {j} has lower > upper");
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: Vec::new(),
            dual_eq: vec![0.0; lp.eq_rows.len()],
            dual_ub: vec![0.0; lp.ub_rows.len()],
            objective_value: f64::NAN,
            dual_value: f64::NAN,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            iterations: 0,
            ray: None,
            farkas: None,
        });
    }
    let mut sx = Simplex::new(&std, cfg);
    sx.run(lp, &std)
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = lo + z
    Shift { col: usize, lo: f64 },
    /// x = hi − z
    Reflect { col: usize, hi: f64 },
    /// x = z⁺ − z⁻
    Split { pos: usize, neg: usize },
}

struct StdForm {
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    row_sign: Vec<f64>,
    /// Column with coefficient +1 in this row after sign normalization.
    unit_col: Vec<Option<usize>>,
    vars: Vec<VarMap>,
    n_eq: usize,
    n_ub: usize,
    crossed_bounds: Option<usize>,
}

impl StdForm {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let n_eq = lp.eq_rows.len();
        let n_ub = lp.ub_rows.len();
        let mut crossed_bounds = None;

        let mut vars = Vec::with_capacity(n);
        let mut next = 0usize;
        let mut bound_rows: Vec<(usize, f64)> = Vec::new();
        let mut constant = vec![0.0; n];
        for j in 0..n {
            let (lo, hi) = (lp.lower[j], lp.upper[j]);
            if lo.is_finite() {
                vars.push(VarMap::Shift { col: next, lo });
                constant[j] = lo;
                if hi.is_finite() {
                    if hi < lo {
                        crossed_bounds = Some(j);
                    }
                    bound_rows.push((next, hi - lo));
                }
                next += 1;
            } else if hi.is_finite() {
                vars.push(VarMap::Reflect { col: next, hi });
                constant[j] = hi;
                next += 1;
            } else {
                vars.push(VarMap::Split { pos: next, neg: next + 1 });
                next += 2;
            }
        }
        let n_struct = next;
        let m = n_eq + n_ub + bound_rows.len();

        let mut rhs = Vec::with_capacity(m);
        for (row, b) in lp.eq_rows.iter().zip(&lp.eq_rhs) {
            rhs.push(b - dot(row, &constant));
        }
        for (row, h) in lp.ub_rows.iter().zip(&lp.ub_rhs) {
            rhs.push(h - dot(row, &constant));
        }
        for &(_, width) in &bound_rows {
            rhs.push(width);
        }
        let row_sign: Vec<f64> = rhs.iter().map(|r| if *r < 0.0 { -1.0 } else { 1.0 }).collect();
        for (r, s) in rhs.iter_mut().zip(&row_sign) {
            *r *= s;
        }

        let n_cols = n_struct + n_ub + bound_rows.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_cols];
        let mut cost = vec![0.0; n_cols];
        for (j, map) in vars.iter().enumerate() {
            let entries = |sign: f64| {
                let mut e = Vec::new();
                for (i, row) in lp.eq_rows.iter().enumerate() {
                    if row[j] != 0.0 {
                        e.push((i, sign * row[j] * row_sign[i]));
                    }
                }
                for (i, row) in lp.ub_rows.iter().enumerate() {
                    let r = n_eq + i;
                    if row[j] != 0.0 {
                        e.push((r, sign * row[j] * row_sign[r]));
                    }
                }
                e
            };
            match *map {
                VarMap::Shift { col, .. } => {
                    cols[col] = entries(1.0);
                    cost[col] = lp.objective[j];
                }
                VarMap::Reflect { col, .. } => {
                    cols[col] = entries(-1.0);
                    cost[col] = -lp.objective[j];
                }
                VarMap::Split { pos, neg } => {
                    cols[pos] = entries(1.0);
                    cols[neg] = entries(-1.0);
                    cost[pos] = lp.objective[j];
                    cost[neg] = -lp.objective[j];
                }
            }
        }
        let mut unit_col = vec![None; m];
        for i in 0..n_ub {
            let r = n_eq + i;
            let c = n_struct + i;
            cols[c].push((r, row_sign[r]));
            if row_sign[r] > 0.0 {
                unit_col[r] = Some(c);
            }
        }
        for (k, &(zcol, _)) in bound_rows.iter().enumerate() {
            let r = n_eq + n_ub + k;
            let c = n_struct + n_ub + k;
            cols[zcol].push((r, row_sign[r]));
            cols[c].push((r, row_sign[r]));
            if row_sign[r] > 0.0 {
                unit_col[r] = Some(c);
            }
        }

        Self { m, cols, cost, rhs, row_sign, unit_col, vars, n_eq, n_ub, crossed_bounds }
    }

    fn n_real(&self) -> usize {
        self.cols.len()
    }

    fn to_original(&self, z: &[f64], with_constant: bool) -> Vec<f64> {
        self.vars
            .iter()
            .map(|map| match *map {
                VarMap::Shift { col, lo } => z[col] + if with_constant { lo } else { 0.0 },
                VarMap::Reflect { col, hi } => (if with_constant { hi } else { 0.0 }) - z[col],
                VarMap::Split { pos, neg } => z[pos] - z[neg],
            })
            .collect()
    }

    fn to_original_duals(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let signed: Vec<f64> = y.iter().zip(&self.row_sign).map(|(y, s)| y * s).collect();
        (signed[..self.n_eq].to_vec(), signed[self.n_eq..self.n_eq + self.n_ub].to_vec())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum PhaseEnd {
    Optimal,
    Unbounded { entering: usize, direction: Vec<f64> },
}

struct Simplex<'a> {
    cfg: &'a LpConfig,
    m: usize,
    n_real: usize,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
}

impl<'a> Simplex<'a> {
    fn new(std: &StdForm, cfg: &'a LpConfig) -> Self {
        let m = std.m;
        let n_real = std.n_real();
        let mut basis = Vec::with_capacity(m);
        let mut in_basis = vec![false; n_real + m];
        for i in 0..m {
            let c = std.unit_col[i].unwrap_or(n_real + i);
            basis.push(c);
            in_basis[c] = true;
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        Self {
            cfg,
            m,
            n_real,
            basis,
            in_basis,
            binv,
            xb: std.rhs.clone(),
            iterations: 0,
            since_refactor: 0,
        }
    }

    fn is_artificial(&self, c: usize) -> bool {
        c >= self.n_real
    }

    fn column<'s>(&self, std: &'s StdForm, c: usize, buf: &'s mut [(usize, f64); 1]) -> &'s [(usize, f64)] {
        if c < self.n_real {
            &std.cols[c]
        } else {
            buf[0] = (c - self.n_real, 1.0);
            &buf[..]
        }
    }

    fn cost(&self, std: &StdForm, phase: Phase, c: usize) -> f64 {
        match (phase, self.is_artificial(c)) {
            (Phase::One, true) => 1.0,
            (Phase::One, false) => 0.0,
            (Phase::Two, true) => 0.0,
            (Phase::Two, false) => std.cost[c],
        }
    }

    fn refactor(&mut self, std: &StdForm) -> Result<()> {
        let m = self.m;
        // Gauss-Jordan on [B | I].
        let mut b = vec![0.0; m * m];
        let mut buf = [(0, 0.0)];
        for (k, &c) in self.basis.iter().enumerate() {
            for &(i, a) in self.column(std, c, &mut buf) {
                b[i * m + k] = a;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&a, &b2| b[a * m + col].abs().total_cmp(&b[b2 * m + col].abs()))
                .unwrap_or(col);
            let pv = b[piv * m + col];
            if pv.abs() < 1e-13 {
                return Err(Error::NumericFailure("singular basis during refactorization".into()));
            }
            if piv != col {
                for j in 0..m {
                    b.swap(piv * m + j, col * m + j);
                    inv.swap(piv * m + j, col * m + j);
                }
            }
            for j in 0..m {
                b[col * m + j] /= pv;
                inv[col * m + j] /= pv;
            }
            for i in 0..m {
                if i == col {
                    continue;
                }
                let f = b[i * m + col];
                if f != 0.0 {
                    for j in 0..m {
                        b[i * m + j] -= f * b[col * m + j];
                        inv[i * m + j] -= f * inv[col * m + j];
                    }
                }
            }
        }
        self.binv = inv;
        self.xb = (0..m).map(|i| dot(&self.binv[i * m..(i + 1) * m], &std.rhs)).collect();
        for v in self.xb.iter_mut() {
            if *v < 0.0 && *v > -self.cfg.feas_tol {
                *v = 0.0;
            }
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn duals(&self, std: &StdForm, phase: Phase) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (k, &c) in self.basis.iter().enumerate() {
            let cb = self.cost(std, phase, c);
            if cb != 0.0 {
                let row = &self.binv[k * m..(k + 1) * m];
                for (yi, b) in y.iter_mut().zip(row) {
                    *yi += cb * b;
                }
            }
        }
        y
    }

    fn ftran(&self, col: &[(usize, f64)]) -> Vec<f64> {
        let m = self.m;
        let mut u = vec![0.0; m];
        for &(k, a) in col {
            for (i, ui) in u.iter_mut().enumerate() {
                *ui += self.binv[i * m + k] * a;
            }
        }
        u
    }

    fn pivot(&mut self, r: usize, entering: usize, u: &[f64]) {
        let m = self.m;
        let ur = u[r];
        let t = self.xb[r] / ur;
        for j in 0..m {
            self.binv[r * m + j] /= ur;
        }
        for i in 0..m {
            if i == r || u[i] == 0.0 {
                continue;
            }
            let f = u[i];
            for j in 0..m {
                self.binv[i * m + j] -= f * self.binv[r * m + j];
            }
            self.xb[i] -= f * t;
            if self.xb[i] < 0.0 && self.xb[i] > -1e-11 {
                self.xb[i] = 0.0;
            }
        }
        self.xb[r] = t;
        let leaving = self.basis[r];
        self.in_basis[leaving] = false;
        self.in_basis[entering] = true;
        self.basis[r] = entering;
        self.iterations += 1;
        self.since_refactor += 1;
    }

    fn iterate(&mut self, std: &StdForm, phase: Phase) -> Result<PhaseEnd> {
        let mut bland = false;
        let mut degenerate_run = 0usize;
        let mut fresh = false;
        loop {
            if self.since_refactor >= self.cfg.refactor_every {
                self.refactor(std)?;
            }
            if self.iterations >= self.cfg.max_iters {
                return Err(Error::NumericFailure(format!(
                    "simplex iteration limit {} reached",
                    self.cfg.max_iters
                )));
            }
            let y = self.duals(std, phase);
            let mut entering: Option<(usize, f64)> = None;
            for c in 0..self.n_real {
                if self.in_basis[c] {
                    continue;
                }
                let d = std.cost[c] * if phase == Phase::Two { 1.0 } else { 0.0 }
                    - std.cols[c].iter().map(|&(i, a)| y[i] * a).sum::<f64>();
                if d < -self.cfg.opt_tol {
                    match entering {
                        None => entering = Some((c, d)),
                        Some((_, best)) if !bland && d < best => entering = Some((c, d)),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((q, _)) = entering else {
                if fresh {
                    return Ok(PhaseEnd::Optimal);
                }
                // Confirm optimality on a freshly factored basis.
                self.refactor(std)?;
                fresh = true;
                continue;
            };
            fresh = false;
            let u = self.ftran(&std.cols[q]);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if u[i] <= self.cfg.pivot_tol {
                    continue;
                }
                let t = self.xb[i].max(0.0) / u[i];
                leave = match leave {
                    None => Some((i, t)),
                    Some((r, best)) => {
                        let tie = (t - best).abs() <= 1e-12 * (1.0 + best.abs());
                        let better = if tie {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                // Prefer evicting artificials, then larger pivots.
                                let (ai, ar) = (self.is_artificial(self.basis[i]), self.is_artificial(self.basis[r]));
                                ai && !ar || (ai == ar && u[i] > u[r])
                            }
                        } else {
                            t < best
                        };
                        if better { Some((i, t)) } else { Some((r, best)) }
                    }
                };
            }
            let Some((r, t)) = leave else {
                return Ok(PhaseEnd::Unbounded { entering: q, direction: u });
            };
            if t <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run >= self.cfg.degenerate_switch {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            log::trace!("pivot {}: enter {q} leave {} step {t:e} bland={bland}", self.iterations, self.basis[r]);
            self.pivot(r, q, &u);
        }
    }

    /// Pivots zero-level artificials out of the basis where some real
    /// column allows it; rows where none does are redundant.
    fn drive_out_artificials(&mut self, std: &StdForm) -> Result<()> {
        let m = self.m;
        for r in 0..m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let row = self.binv[r * m..(r + 1) * m].to_vec();
            let mut best: Option<(usize, f64)> = None;
            for c in 0..self.n_real {
                if self.in_basis[c] {
                    continue;
                }
                let alpha: f64 = std.cols[c].iter().map(|&(i, a)| row[i] * a).sum();
                if alpha.abs() > 1e-7 && best.is_none_or(|(_, b)| alpha.abs() > b.abs()) {
                    best = Some((c, alpha));
                }
            }
            if let Some((c, _)) = best {
                let u = self.ftran(&std.cols[c]);
                self.pivot(r, c, &u);
                self.xb[r] = self.xb[r].max(0.0);
            } else {
                log::debug!("row {r} is redundant");
            }
        }
        self.refactor(std)
    }

    fn z_vector(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.n_real];
        for (k, &c) in self.basis.iter().enumerate() {
            if c < self.n_real {
                z[c] = self.xb[k].max(0.0);
            }
        }
        z
    }

    fn run(&mut self, lp: &LinearProgram, std: &StdForm) -> Result<LpSolution> {
        let cfg = self.cfg;
        let needs_phase_one = self.basis.iter().any(|&c| self.is_artificial(c));
        if needs_phase_one {
            match self.iterate(std, Phase::One)? {
                PhaseEnd::Optimal => {}
                PhaseEnd::Unbounded { .. } => {
                    return Err(Error::NumericFailure("phase one reported unbounded".into()));
                }
            }
            let infeas: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(c, _)| self.is_artificial(**c))
                .map(|(_, x)| x.max(0.0))
                .sum();
            let scale = 1.0 + std.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if infeas > cfg.feas_tol * scale {
                let y = self.duals(std, Phase::One);
                let (fe, fu) = std.to_original_duals(&y);
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    x: Vec::new(),
                    dual_eq: vec![0.0; std.n_eq],
                    dual_ub: vec![0.0; std.n_ub],
                    objective_value: f64::NAN,
                    dual_value: f64::NAN,
                    primal_residual: infeas,
                    dual_residual: f64::NAN,
                    iterations: self.iterations,
                    ray: None,
                    farkas: Some((fe, fu)),
                });
            }
            self.drive_out_artificials(std)?;
        }

        match self.iterate(std, Phase::Two)? {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded { entering, direction } => {
                let mut dz = vec![0.0; self.n_real];
                dz[entering] = 1.0;
                for (k, &c) in self.basis.iter().enumerate() {
                    if c < self.n_real {
                        dz[c] = -direction[k];
                    }
                }
                let x = std.to_original(&self.z_vector(), true);
                return Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    objective_value: f64::NEG_INFINITY,
                    x,
                    dual_eq: vec![0.0; std.n_eq],
                    dual_ub: vec![0.0; std.n_ub],
                    dual_value: f64::NAN,
                    primal_residual: f64::NAN,
                    dual_residual: f64::NAN,
                    iterations: self.iterations,
                    ray: Some(std.to_original(&dz, false)),
                    farkas: None,
                });
            }
        }

        let x = std.to_original(&self.z_vector(), true);
        let y = self.duals(std, Phase::Two);
        let (dual_eq, dual_ub) = std.to_original_duals(&y);
        let objective_value = lp.value_at(&x);
        let primal_residual = lp.primal_residual(&x);
        let (dual_value, dual_residual) = lp.dual_check(&dual_eq, &dual_ub);
        let rhs_scale = 1.0
            + lp.eq_rhs.iter().chain(&lp.ub_rhs).fold(0.0f64, |a, b| a.max(b.abs()));
        let cost_scale = 1.0 + lp.objective.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let gap = (objective_value - dual_value).abs();
        if primal_residual > cfg.feas_tol * rhs_scale
            || dual_residual > cfg.feas_tol * cost_scale
            || gap > cfg.gap_tol
        {
            return Err(Error::NumericFailure(format!(
                "optimality check failed: primal residual {primal_residual:e}, \
                 dual residual {dual_residual:e}, gap {gap:e}"
            )));
        }
        Ok(LpSolution {
            status: LpStatus::Optimal,
            x,
            dual_eq,
            dual_ub,
            objective_value,
            dual_value,
            primal_residual,
            dual_residual,
            iterations: self.iterations,
            ray: None,
            farkas: None,
        })
    }
}

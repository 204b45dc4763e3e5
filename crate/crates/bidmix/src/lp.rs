//! Dense two-phase simplex with bounded variables and dual extraction.
//!
//! Variables carry individual `[lower, upper]` bounds handled implicitly
//! (nonbasic-at-upper-bound technique), so box constraints cost nothing in
//! the row dimension. That keeps the offline allocation LPs at d rows for
//! T variables and the knapsack-style inner saddle LPs at d rows for tens
//! of thousands of samples.
//!
//! Pivot rule: Dantzig pricing with a Bland fallback once a pivot budget is
//! exhausted, then a hard iteration cap that surfaces as
//! [`Error::SolverStalled`] rather than a silent wrong answer.
//!
//! Dual sign convention for a minimization problem: `>=` rows have
//! nonnegative duals, `<=` rows nonpositive, `=` rows free. Strong duality
//! reads `c.x = duals.rhs + sum over nonbasic columns of rc_j * x_j`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A dense LP: minimize `objective . x` subject to rows and variable bounds.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Per-variable (lower, upper); upper `None` means unbounded above.
    pub bounds: Vec<(f64, Option<f64>)>,
}

impl LinearProgram {
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            bounds: vec![(0.0, None); n],
        }
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: Option<f64>) {
        self.bounds[var] = (lower, upper);
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.bounds.len(),
            });
        }
        for row in &self.constraints {
            if row.coeffs.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.coeffs.len(),
                });
            }
        }
        for (lo, up) in &self.bounds {
            if let Some(u) = up {
                if *u < *lo {
                    return Err(Error::Precondition(format!(
                        "bound upper {u} below lower {lo}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// One multiplier per constraint row.
    pub duals: Vec<f64>,
    /// Reduced costs of the structural variables.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Result<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Ok(s),
            LpOutcome::Infeasible => Err(Error::Infeasible),
            LpOutcome::Unbounded => Err(Error::Unbounded),
        }
    }
}

const PIVOT_TOL: f64 = 1e-9;
const RC_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColStatus {
    AtLower,
    AtUpper,
    Basic(usize),
}

struct Tableau {
    m: usize,
    /// Total columns: structural + slack + artificial.
    cols: usize,
    /// Row-major m x cols, holds B^{-1} A.
    t: Vec<f64>,
    rhs_scaled: Vec<f64>,
    row_scale: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>, // f64::INFINITY when unbounded
    status: Vec<ColStatus>,
    basis: Vec<usize>,
    x_basic: Vec<f64>,
    cost: Vec<f64>,
    rc: Vec<f64>,
    /// Column index of the artificial for each row.
    art_col: Vec<usize>,
    iterations: usize,
}

impl Tableau {
    fn entry(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.cols + c]
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            ColStatus::AtLower => self.lower[j],
            ColStatus::AtUpper => self.upper[j],
            ColStatus::Basic(r) => self.x_basic[r],
        }
    }

    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let n_slack: usize = lp
            .constraints
            .iter()
            .filter(|c| c.sense != Sense::Eq)
            .count();
        let cols = n + n_slack + m;
        let mut t = vec![0.0; m * cols];
        let mut lower = Vec::with_capacity(cols);
        let mut upper = Vec::with_capacity(cols);
        for (lo, up) in &lp.bounds {
            lower.push(*lo);
            upper.push(up.unwrap_or(f64::INFINITY));
        }

        // Residual of each row with all structural variables at lower bound.
        let mut resid: Vec<f64> = lp
            .constraints
            .iter()
            .map(|c| {
                c.rhs
                    - c.coeffs
                        .iter()
                        .zip(&lp.bounds)
                        .map(|(a, (lo, _))| a * lo)
                        .sum::<f64>()
            })
            .collect();
        let row_scale: Vec<f64> = resid
            .iter()
            .map(|v| if *v < 0.0 { -1.0 } else { 1.0 })
            .collect();

        let mut rhs_scaled = vec![0.0; m];
        for (i, c) in lp.constraints.iter().enumerate() {
            let s = row_scale[i];
            for (j, a) in c.coeffs.iter().enumerate() {
                t[i * cols + j] = s * a;
            }
            rhs_scaled[i] = s * c.rhs;
            resid[i] *= s;
        }

        // Slack columns.
        let mut slack_col = vec![None; m];
        let mut next = n;
        for (i, c) in lp.constraints.iter().enumerate() {
            let sigma = match c.sense {
                Sense::Le => 1.0,
                Sense::Ge => -1.0,
                Sense::Eq => continue,
            };
            t[i * cols + next] = row_scale[i] * sigma;
            lower.push(0.0);
            upper.push(f64::INFINITY);
            slack_col[i] = Some(next);
            next += 1;
        }
        debug_assert_eq!(lower.len(), next);

        // Artificial columns (+e_i in scaled space), one per row.
        let mut art_col = vec![0; m];
        for i in 0..m {
            t[i * cols + next] = 1.0;
            lower.push(0.0);
            upper.push(f64::INFINITY);
            art_col[i] = next;
            next += 1;
        }
        debug_assert_eq!(next, cols);

        // Initial basis: the row's slack when its scaled coefficient is +1,
        // otherwise the artificial.
        let mut status = vec![ColStatus::AtLower; cols];
        let mut basis = Vec::with_capacity(m);
        let mut x_basic = Vec::with_capacity(m);
        let mut cost = vec![0.0; cols];
        for i in 0..m {
            let use_slack = slack_col[i]
                .map(|s| t[i * cols + s] > 0.5)
                .unwrap_or(false);
            let b = if use_slack {
                slack_col[i].unwrap()
            } else {
                cost[art_col[i]] = 1.0;
                art_col[i]
            };
            status[b] = ColStatus::Basic(i);
            basis.push(b);
            x_basic.push(resid[i]);
        }
        // Artificials that were never needed stay pinned at zero.
        for i in 0..m {
            let a = art_col[i];
            if status[a] == ColStatus::AtLower && cost[a] == 0.0 {
                upper[a] = 0.0;
            }
        }

        Tableau {
            m,
            cols,
            t,
            rhs_scaled,
            row_scale,
            lower,
            upper,
            status,
            basis,
            x_basic,
            cost,
            rc: vec![0.0; cols],
            art_col,
            iterations: 0,
        }
    }

    fn recompute_rc(&mut self) {
        for j in 0..self.cols {
            let mut v = self.cost[j];
            for r in 0..self.m {
                let cb = self.cost[self.basis[r]];
                if cb != 0.0 {
                    v -= cb * self.entry(r, j);
                }
            }
            self.rc[j] = v;
        }
    }

    /// One simplex iteration. Returns false when optimal for the current
    /// costs, or an error for unbounded/stall.
    fn step(&mut self, bland: bool) -> Result<bool> {
        // Pricing.
        let mut entering: Option<(usize, f64, f64)> = None; // (col, direction, score)
        for j in 0..self.cols {
            if self.upper[j] - self.lower[j] <= 0.0 {
                continue;
            }
            let (dir, score) = match self.status[j] {
                ColStatus::AtLower => (1.0, -self.rc[j]),
                ColStatus::AtUpper => (-1.0, self.rc[j]),
                ColStatus::Basic(_) => continue,
            };
            if score <= RC_TOL {
                continue;
            }
            if bland {
                entering = Some((j, dir, score));
                break;
            }
            if entering.map(|(_, _, s)| score > s).unwrap_or(true) {
                entering = Some((j, dir, score));
            }
        }
        let Some((q, dir, _)) = entering else {
            return Ok(false);
        };

        // Ratio test: entering moves by delta >= 0 along `dir`.
        let mut delta = self.upper[q] - self.lower[q]; // own bound flip
        let mut leaving: Option<usize> = None;
        for r in 0..self.m {
            let alpha = dir * self.entry(r, q);
            let b = self.basis[r];
            let limit = if alpha > PIVOT_TOL {
                (self.x_basic[r] - self.lower[b]) / alpha
            } else if alpha < -PIVOT_TOL {
                let ub = self.upper[b];
                if ub.is_infinite() {
                    continue;
                }
                (self.x_basic[r] - ub) / alpha
            } else {
                continue;
            };
            let limit = limit.max(0.0);
            let replace = match leaving {
                None => limit < delta - PIVOT_TOL,
                Some(cur) => {
                    limit < delta - PIVOT_TOL
                        || (limit < delta + PIVOT_TOL
                            && bland
                            && self.basis[r] < self.basis[cur])
                }
            };
            if replace {
                delta = limit;
                leaving = Some(r);
            }
        }

        if delta.is_infinite() {
            return Err(Error::Unbounded);
        }

        // Apply the move to the basic values.
        if delta > 0.0 {
            for r in 0..self.m {
                let alpha = self.entry(r, q);
                if alpha != 0.0 {
                    self.x_basic[r] -= dir * delta * alpha;
                }
            }
        }

        match leaving {
            None => {
                // Bound flip.
                self.status[q] = if dir > 0.0 {
                    ColStatus::AtUpper
                } else {
                    ColStatus::AtLower
                };
            }
            Some(r) => {
                let out = self.basis[r];
                let alpha_out = dir * self.entry(r, q);
                self.status[out] = if alpha_out > 0.0 {
                    ColStatus::AtLower
                } else {
                    ColStatus::AtUpper
                };
                let entering_value = match self.status[q] {
                    ColStatus::AtLower => self.lower[q] + dir * delta,
                    ColStatus::AtUpper => self.upper[q] + dir * delta,
                    ColStatus::Basic(_) => unreachable!(),
                };
                self.pivot(r, q);
                self.basis[r] = q;
                self.status[q] = ColStatus::Basic(r);
                self.x_basic[r] = entering_value;
                // Snap the leaving variable exactly onto its bound.
                let snapped = match self.status[out] {
                    ColStatus::AtLower => self.lower[out],
                    ColStatus::AtUpper => self.upper[out],
                    ColStatus::Basic(_) => unreachable!(),
                };
                let _ = snapped;
            }
        }
        self.iterations += 1;
        Ok(true)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let piv = self.t[r * cols + q];
        let inv = 1.0 / piv;
        for c in 0..cols {
            self.t[r * cols + c] *= inv;
        }
        self.t[r * cols + q] = 1.0;
        for row in 0..self.m {
            if row == r {
                continue;
            }
            let factor = self.t[row * cols + q];
            if factor == 0.0 {
                continue;
            }
            for c in 0..cols {
                self.t[row * cols + c] -= factor * self.t[r * cols + c];
            }
            self.t[row * cols + q] = 0.0;
        }
        let rc_factor = self.rc[q];
        if rc_factor != 0.0 {
            for c in 0..cols {
                self.rc[c] -= rc_factor * self.t[r * cols + c];
            }
            self.rc[q] = 0.0;
        }
    }

    fn run(&mut self, bland_after: usize, max_iter: usize) -> Result<()> {
        loop {
            let bland = self.iterations >= bland_after;
            if self.iterations >= max_iter {
                return Err(Error::SolverStalled {
                    iterations: self.iterations,
                });
            }
            if !self.step(bland)? {
                return Ok(());
            }
        }
    }

    fn objective_value(&self) -> f64 {
        let mut v = 0.0;
        for j in 0..self.cols {
            let x = self.nonbasic_value(j);
            if x != 0.0 {
                v += self.cost[j] * x;
            }
        }
        v
    }
}

/// Solves the LP. Dimension inconsistencies error before solving; cycling
/// beyond the pivot cap errors with `SolverStalled`.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    let m = lp.num_rows();
    let n = lp.num_vars();
    let mut tab = Tableau::build(lp);

    let scale_budget = 64 * (m + tab.cols) + 4096;
    let max_iter = 16 * scale_budget;

    // Phase 1: drive artificials to zero.
    let needs_phase1 = tab.cost.iter().any(|c| *c != 0.0);
    if needs_phase1 {
        tab.recompute_rc();
        match tab.run(scale_budget, max_iter) {
            Ok(()) => {}
            Err(Error::Unbounded) => unreachable!("phase 1 objective is bounded below"),
            Err(e) => return Err(e),
        }
        let infeas = tab.objective_value();
        let rhs_scale = 1.0 + tab.rhs_scaled.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeas > FEAS_TOL * rhs_scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Pin artificials and try to drive basic ones out of the basis.
        for i in 0..m {
            let a = tab.art_col[i];
            tab.upper[a] = 0.0;
            if let ColStatus::Basic(r) = tab.status[a] {
                tab.x_basic[r] = 0.0;
                let pivot_col = (0..tab.cols)
                    .filter(|j| *j != a && !matches!(tab.status[*j], ColStatus::Basic(_)))
                    .filter(|j| tab.art_col.iter().all(|ac| ac != j))
                    .find(|j| tab.entry(r, *j).abs() > 1e-7);
                if let Some(q) = pivot_col {
                    tab.status[a] = ColStatus::AtLower;
                    tab.pivot(r, q);
                    tab.basis[r] = q;
                    tab.status[q] = ColStatus::Basic(r);
                    tab.x_basic[r] = 0.0;
                }
                // A fully zero row is redundant; the artificial stays basic at 0.
            }
        }
    }

    // Phase 2: real objective.
    for j in 0..tab.cols {
        tab.cost[j] = if j < n { lp.objective[j] } else { 0.0 };
    }
    tab.recompute_rc();
    tab.iterations = 0;
    match tab.run(scale_budget, max_iter) {
        Ok(()) => {}
        Err(Error::Unbounded) => return Ok(LpOutcome::Unbounded),
        Err(e) => return Err(e),
    }

    let x: Vec<f64> = (0..n).map(|j| tab.nonbasic_value(j)).collect();
    let duals: Vec<f64> = (0..m)
        .map(|i| -tab.row_scale[i] * tab.rc[tab.art_col[i]])
        .collect();
    let reduced_costs: Vec<f64> = tab.rc[..n].to_vec();
    let objective = x
        .iter()
        .zip(&lp.objective)
        .map(|(xi, ci)| xi * ci)
        .sum();
    Ok(LpOutcome::Optimal(LpSolution {
        x,
        duals,
        reduced_costs,
        objective,
    }))
}

impl LpSolution {
    /// Row slacks rhs - A x (positive slack for a loose `<=` row).
    pub fn row_slacks(&self, lp: &LinearProgram) -> Vec<f64> {
        lp.constraints
            .iter()
            .map(|c| {
                let ax: f64 = c.coeffs.iter().zip(&self.x).map(|(a, x)| a * x).sum();
                c.rhs - ax
            })
            .collect()
    }

    /// Checks primal feasibility, dual sign consistency, complementary
    /// slackness and strong duality at the stated tolerances.
    pub fn verify(&self, lp: &LinearProgram) -> std::result::Result<(), String> {
        let slacks = self.row_slacks(lp);
        for (i, (c, s)) in lp.constraints.iter().zip(&slacks).enumerate() {
            let scale = 1.0 + c.rhs.abs();
            let feas_ok = match c.sense {
                Sense::Le => *s >= -FEAS_TOL * scale,
                Sense::Ge => *s <= FEAS_TOL * scale,
                Sense::Eq => s.abs() <= FEAS_TOL * scale,
            };
            if !feas_ok {
                return Err(format!("row {i} infeasible: slack {s}"));
            }
            let y = self.duals[i];
            let sign_ok = match c.sense {
                Sense::Le => y <= 1e-7,
                Sense::Ge => y >= -1e-7,
                Sense::Eq => true,
            };
            if !sign_ok {
                return Err(format!("row {i} dual sign violation: {y}"));
            }
            if (y * s).abs() > 1e-6 * scale {
                return Err(format!("row {i} complementary slackness violation"));
            }
        }
        for (j, ((lo, up), x)) in lp.bounds.iter().zip(&self.x).enumerate() {
            if *x < lo - FEAS_TOL || up.map(|u| *x > u + FEAS_TOL).unwrap_or(false) {
                return Err(format!("var {j} out of bounds: {x}"));
            }
        }
        // Strong duality with bound contributions from reduced costs.
        let mut dual_obj: f64 = lp
            .constraints
            .iter()
            .zip(&self.duals)
            .map(|(c, y)| c.rhs * y)
            .sum();
        for (j, rc) in self.reduced_costs.iter().enumerate() {
            let (lo, up) = lp.bounds[j];
            let x = self.x[j];
            let at_lower = (x - lo).abs() <= 1e-7 * (1.0 + lo.abs());
            let at_upper = up
                .map(|u| (x - u).abs() <= 1e-7 * (1.0 + u.abs()))
                .unwrap_or(false);
            if at_lower && *rc > 0.0 {
                dual_obj += rc * lo;
            } else if at_upper && *rc < 0.0 {
                dual_obj += rc * up.unwrap();
            }
        }
        let gap = (self.objective - dual_obj).abs();
        if gap > 1e-6 * (1.0 + self.objective.abs()) {
            return Err(format!(
                "strong duality gap {gap}: primal {} dual {dual_obj}",
                self.objective
            ));
        }
        Ok(())
    }
}

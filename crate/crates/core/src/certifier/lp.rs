//! Dense bounded-variable simplex.
//!
//! Every row `a·x {<=,=,>=} b` gets a slack `s` with `a·x + s = b`, so the
//! slack's bounds encode the relation. The tableau keeps `B⁻¹[A | I]`, the
//! transformed right-hand side `B⁻¹b` and the reduced-cost row; nonbasic
//! variables sit at one of their bounds (or at 0 when free).
//!
//! A fresh solve starts from the all-slack basis. When every nonbasic
//! variable can be placed on the bound matching the sign of its cost the
//! basis is dual feasible and the dual simplex runs; otherwise a composite
//! primal phase 1 / phase 2 does. Re-solves after bound changes (branch and
//! bound) keep the current basis, which stays dual feasible for boxed
//! variables, and go straight to the dual simplex. Entering/leaving choices
//! use the largest violation or ratio with lowest-index tie-breaking, falling
//! back to Bland's rule after a run of degenerate pivots.

use crate::error::{contract, Error, Result};

const FEAS_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 50;
const REFACTOR_EVERY: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize c·x` subject to linear rows and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// Empty program with `num_vars` variables bounded to `[0, +inf)`.
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(contract("bound vectors must match the variable count"));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(contract(format!("variable {j} has invalid bounds [{l}, {u}]")));
            }
            if !self.objective[j].is_finite() {
                return Err(contract(format!("objective coefficient {j} is not finite")));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() || c.coeffs.iter().any(|&(j, a)| j >= n || !a.is_finite()) {
                return Err(contract(format!("constraint {i} is malformed")));
            }
        }
        Ok(())
    }
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
    /// Objective value; meaningful only when `status` is `Optimal`.
    pub objective: f64,
    /// Structural variable values.
    pub x: Vec<f64>,
    pub iterations: usize,
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    let mut simplex = Simplex::new(lp)?;
    let status = simplex.solve()?;
    Ok(LpSolution {
        status,
        objective: simplex.objective_value(),
        x: simplex.primal(),
        iterations: simplex.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable held at zero.
    Zero,
}

/// Reusable simplex engine; bounds may be changed between solves.
#[derive(Debug, Clone)]
pub(crate) struct Simplex {
    m: usize,
    structural: usize,
    cols: usize,
    /// Original constraint matrix (dense, `m x structural`), kept for refactoring.
    a: Vec<f64>,
    b: Vec<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// `B⁻¹[A | I]`, row-major `m x cols`.
    tab: Vec<f64>,
    beta: Vec<f64>,
    reduced: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    x: Vec<f64>,
    pub(crate) iterations: usize,
    solve_start: usize,
    pivots_since_refactor: usize,
    max_iterations: usize,
    scratch_nz: Vec<usize>,
}

impl Simplex {
    pub(crate) fn new(lp: &LinearProgram) -> Result<Self> {
        lp.validate()?;
        let m = lp.constraints.len();
        let structural = lp.num_vars();
        let cols = structural + m;
        let mut a = vec![0.0; m * structural];
        let mut b = vec![0.0; m];
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        for (i, c) in lp.constraints.iter().enumerate() {
            for &(j, v) in &c.coeffs {
                a[i * structural + j] += v;
            }
            b[i] = c.rhs;
        }
        for c in &lp.constraints {
            let (l, u) = match c.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lower.push(l);
            upper.push(u);
        }
        let mut cost = lp.objective.clone();
        cost.resize(cols, 0.0);
        let mut s = Self {
            m,
            structural,
            cols,
            a,
            b,
            cost,
            lower,
            upper,
            tab: Vec::new(),
            beta: Vec::new(),
            reduced: Vec::new(),
            basis: (structural..cols).collect(),
            state: vec![State::Lower; cols],
            x: vec![0.0; cols],
            iterations: 0,
            solve_start: 0,
            pivots_since_refactor: 0,
            max_iterations: 50_000 + 100 * cols,
            scratch_nz: Vec::with_capacity(cols),
        };
        s.reset_tableau();
        for j in 0..structural {
            s.state[j] = s.resting_state(j);
        }
        for (r, &v) in s.basis.iter().enumerate() {
            s.state[v] = State::Basic;
            debug_assert_eq!(v, structural + r);
        }
        s.recompute_values();
        Ok(s)
    }

    fn reset_tableau(&mut self) {
        let (m, cols, n) = (self.m, self.cols, self.structural);
        self.tab = vec![0.0; m * cols];
        for i in 0..m {
            self.tab[i * cols..i * cols + n].copy_from_slice(&self.a[i * n..(i + 1) * n]);
            self.tab[i * cols + n + i] = 1.0;
        }
        self.beta = self.b.clone();
        self.reduced = self.cost.clone();
    }

    /// Nonbasic placement that keeps `j` dual feasible when possible.
    fn resting_state(&self, j: usize) -> State {
        let (l, u) = (self.lower[j], self.upper[j]);
        let d = self.reduced[j];
        if d > 0.0 && u.is_finite() {
            State::Upper
        } else if l.is_finite() {
            State::Lower
        } else if u.is_finite() {
            State::Upper
        } else {
            State::Zero
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            State::Lower => self.lower[j],
            State::Upper => self.upper[j],
            State::Zero => 0.0,
            State::Basic => self.x[j],
        }
    }

    fn recompute_values(&mut self) {
        for j in 0..self.cols {
            if self.state[j] != State::Basic {
                self.x[j] = self.nonbasic_value(j);
            }
        }
        let cols = self.cols;
        for r in 0..self.m {
            let row = &self.tab[r * cols..(r + 1) * cols];
            let mut v = self.beta[r];
            for j in 0..cols {
                if self.state[j] != State::Basic {
                    let t = row[j];
                    if t != 0.0 {
                        let xj = self.x[j];
                        if xj != 0.0 {
                            v -= t * xj;
                        }
                    }
                }
            }
            self.x[self.basis[r]] = v;
        }
    }

    pub(crate) fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
        if self.state[var] != State::Basic {
            self.state[var] = self.resting_state(var);
        }
    }

    pub(crate) fn objective_value(&self) -> f64 {
        (0..self.structural).map(|j| self.cost[j] * self.x[j]).sum()
    }

    pub(crate) fn primal(&self) -> Vec<f64> {
        self.x[..self.structural].to_vec()
    }

    fn violation(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] - FEAS_TOL {
            self.lower[j] - v
        } else if v > self.upper[j] + FEAS_TOL {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn dual_feasible(&self) -> bool {
        (0..self.cols).all(|j| self.dual_ok(j))
    }

    fn dual_ok(&self, j: usize) -> bool {
        let d = self.reduced[j];
        match self.state[j] {
            State::Basic => true,
            _ if self.lower[j] == self.upper[j] => true,
            State::Lower => d <= DUAL_TOL,
            State::Upper => d >= -DUAL_TOL,
            State::Zero => d.abs() <= DUAL_TOL,
        }
    }

    /// Solves from the current basis and bounds.
    pub(crate) fn solve(&mut self) -> Result<LpStatus> {
        self.solve_start = self.iterations;
        for j in 0..self.cols {
            if self.state[j] != State::Basic && !self.dual_ok(j) {
                self.state[j] = self.resting_state(j);
            }
        }
        self.recompute_values();
        if self.dual_feasible() {
            if self.dual_simplex()? == LpStatus::Infeasible {
                return Ok(LpStatus::Infeasible);
            }
        }
        // Phase 1/2 cleanup; a no-op when the dual simplex already finished.
        let mut status = self.primal_simplex()?;
        if status == LpStatus::Infeasible && self.pivots_since_refactor > 0 {
            self.refactor();
            self.recompute_values();
            status = self.primal_simplex()?;
        }
        if status == LpStatus::Optimal && self.pivots_since_refactor > 0 {
            self.refactor();
            self.recompute_values();
            if (0..self.m).any(|r| self.violation(self.basis[r]) > 0.0) || !self.dual_feasible() {
                return self.primal_simplex();
            }
        }
        Ok(status)
    }

    fn bump(&mut self) -> Result<()> {
        self.iterations += 1;
        if self.iterations - self.solve_start > self.max_iterations {
            return Err(Error::Solver(format!(
                "simplex iteration guard exceeded ({} iterations)",
                self.max_iterations
            )));
        }
        Ok(())
    }

    fn dual_simplex(&mut self) -> Result<LpStatus> {
        let cols = self.cols;
        loop {
            // leaving row: largest bound violation, lowest row on ties
            let mut leave = None;
            let mut worst = 0.0;
            for r in 0..self.m {
                let v = self.violation(self.basis[r]);
                if v > worst {
                    worst = v;
                    leave = Some(r);
                }
            }
            let Some(r) = leave else {
                return Ok(LpStatus::Optimal);
            };
            self.bump()?;
            let leaving = self.basis[r];
            let to_lower = self.x[leaving] < self.lower[leaving];
            let target = if to_lower { self.lower[leaving] } else { self.upper[leaving] };
            // x_B[r] changes by -T[r][j] * delta_j; it must move up when below
            // its lower bound and down when above its upper bound.
            let want_up = to_lower;
            let row = &self.tab[r * cols..(r + 1) * cols];
            let eligible = |j: usize, t: f64| -> bool {
                if t.abs() <= PIVOT_TOL {
                    return false;
                }
                let can_inc = self.x[j] < self.upper[j];
                let can_dec = self.x[j] > self.lower[j];
                match self.state[j] {
                    State::Basic => false,
                    _ if self.lower[j] == self.upper[j] => false,
                    State::Lower => (want_up && t < 0.0 || !want_up && t > 0.0) && can_inc,
                    State::Upper => (want_up && t > 0.0 || !want_up && t < 0.0) && can_dec,
                    State::Zero => true,
                }
            };
            // Harris two-pass ratio test on |d_j / T_rj|.
            let mut bound = f64::INFINITY;
            for j in 0..cols {
                let t = row[j];
                if eligible(j, t) {
                    let ratio = (self.reduced[j].abs() + DUAL_TOL) / t.abs();
                    if ratio < bound {
                        bound = ratio;
                    }
                }
            }
            if bound == f64::INFINITY {
                if self.pivots_since_refactor > 0 {
                    self.refactor();
                    self.recompute_values();
                    continue;
                }
                if self.row_proves_infeasible(r, to_lower) {
                    return Ok(LpStatus::Infeasible);
                }
                // only tiny pivots remain; the primal pass finishes the job
                return Ok(LpStatus::Optimal);
            }
            let mut enter = None;
            let mut best_piv = 0.0;
            for j in 0..cols {
                let t = row[j];
                if eligible(j, t) && self.reduced[j].abs() / t.abs() <= bound && t.abs() > best_piv {
                    best_piv = t.abs();
                    enter = Some(j);
                }
            }
            let q = enter.expect("pass two finds the pass one candidate");
            let delta = (self.x[leaving] - target) / row[q];
            self.x[q] += delta;
            for i in 0..self.m {
                let t = self.tab[i * cols + q];
                if t != 0.0 {
                    let bi = self.basis[i];
                    self.x[bi] -= t * delta;
                }
            }
            self.x[leaving] = target;
            self.pivot(r, q);
            self.state[leaving] = if to_lower { State::Lower } else { State::Upper };
            self.after_pivot();
        }
    }

    /// True when row `r` cannot reach the violated bound of its basic
    /// variable for any placement of the nonbasics inside their boxes.
    fn row_proves_infeasible(&self, r: usize, to_lower: bool) -> bool {
        let cols = self.cols;
        let row = &self.tab[r * cols..(r + 1) * cols];
        // x_B = beta_r - Σ t_j x_j
        let mut reach = self.beta[r];
        for j in 0..cols {
            let t = row[j];
            if self.state[j] == State::Basic || t == 0.0 {
                continue;
            }
            let (l, u) = (self.lower[j], self.upper[j]);
            let best = if to_lower == (t < 0.0) { u } else { l };
            if !best.is_finite() {
                return false;
            }
            reach -= t * best;
        }
        let leaving = self.basis[r];
        let margin = 1e-7 * (1.0 + reach.abs());
        if to_lower {
            reach < self.lower[leaving] - margin
        } else {
            reach > self.upper[leaving] + margin
        }
    }

    fn primal_simplex(&mut self) -> Result<LpStatus> {
        let cols = self.cols;
        let mut degenerate = 0usize;
        let mut phase_cost = vec![0.0; self.m];
        loop {
            let mut infeasible = false;
            for r in 0..self.m {
                let v = self.basis[r];
                phase_cost[r] = if self.x[v] < self.lower[v] - FEAS_TOL {
                    infeasible = true;
                    1.0
                } else if self.x[v] > self.upper[v] + FEAS_TOL {
                    infeasible = true;
                    -1.0
                } else {
                    0.0
                };
            }
            let rate = |s: &Self, j: usize| -> f64 {
                if infeasible {
                    let mut acc = 0.0;
                    for r in 0..s.m {
                        let w = phase_cost[r];
                        if w != 0.0 {
                            acc -= w * s.tab[r * cols + j];
                        }
                    }
                    acc
                } else {
                    s.reduced[j]
                }
            };
            let bland = degenerate >= DEGENERATE_SWITCH;
            let mut enter = None;
            let mut best = 0.0;
            for j in 0..cols {
                if self.state[j] == State::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = rate(self, j);
                let dir = if d > DUAL_TOL && self.x[j] < self.upper[j] {
                    1.0
                } else if d < -DUAL_TOL && self.x[j] > self.lower[j] {
                    -1.0
                } else {
                    continue;
                };
                if d.abs() > best {
                    best = d.abs();
                    enter = Some((j, dir));
                    if bland {
                        break;
                    }
                }
            }
            let Some((q, dir)) = enter else {
                return Ok(if infeasible { LpStatus::Infeasible } else { LpStatus::Optimal });
            };
            self.bump()?;

            // basic i moves by alpha_i * t; returns the step to its blocking
            // bound and whether that bound is the lower one
            let flip = self.upper[q] - self.lower[q];
            let limit = |s: &Self, i: usize, slack: f64| -> (f64, bool) {
                let alpha = -s.tab[i * cols + q] * dir;
                if alpha.abs() <= PIVOT_TOL {
                    return (f64::INFINITY, false);
                }
                let v = s.basis[i];
                let (x, l, u) = (s.x[v], s.lower[v], s.upper[v]);
                if alpha > 0.0 {
                    if x > u + FEAS_TOL {
                        (f64::INFINITY, false)
                    } else if x < l - FEAS_TOL {
                        ((l - x + slack) / alpha, true)
                    } else {
                        ((u - x + slack) / alpha, false)
                    }
                } else if x < l - FEAS_TOL {
                    (f64::INFINITY, false)
                } else if x > u + FEAS_TOL {
                    ((x - u + slack) / -alpha, false)
                } else {
                    ((x - l + slack) / -alpha, true)
                }
            };
            let mut harris = flip;
            for i in 0..self.m {
                harris = harris.min(limit(self, i, FEAS_TOL).0);
            }
            if harris == f64::INFINITY {
                if infeasible {
                    return Err(Error::Solver("phase 1 ray without breakpoint".into()));
                }
                return Ok(LpStatus::Unbounded);
            }
            let mut leave = None;
            let mut best_piv = 0.0;
            for i in 0..self.m {
                let (t, hit_lower) = limit(self, i, 0.0);
                let piv = self.tab[i * cols + q].abs();
                if t <= harris && piv > best_piv {
                    best_piv = piv;
                    leave = Some((i, t.max(0.0), hit_lower));
                }
            }
            let leave = leave.filter(|&(_, t, _)| t < flip);
            let step = leave.map_or(flip, |(_, t, _)| t);
            if step <= FEAS_TOL {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.x[q] += dir * step;
            for i in 0..self.m {
                let t = self.tab[i * cols + q];
                if t != 0.0 {
                    let bi = self.basis[i];
                    self.x[bi] -= t * dir * step;
                }
            }
            match leave {
                Some((r, _, hit_lower)) => {
                    let leaving = self.basis[r];
                    self.pivot(r, q);
                    self.state[leaving] = if hit_lower { State::Lower } else { State::Upper };
                    self.x[leaving] = self.nonbasic_value(leaving);
                    self.after_pivot();
                }
                None => {
                    self.state[q] = if dir > 0.0 { State::Upper } else { State::Lower };
                    self.x[q] = self.nonbasic_value(q);
                }
            }
        }
    }

    fn after_pivot(&mut self) {
        self.pivots_since_refactor += 1;
        if self.pivots_since_refactor >= REFACTOR_EVERY {
            self.refactor();
            self.recompute_values();
        }
    }

    /// Gauss-Jordan pivot making column `q` basic in row `r`.
    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let p = self.tab[r * cols + q];
        let inv = 1.0 / p;
        {
            let row = &mut self.tab[r * cols..(r + 1) * cols];
            self.scratch_nz.clear();
            for (j, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    self.scratch_nz.push(j);
                }
            }
            row[q] = 1.0;
        }
        self.beta[r] *= inv;
        let (head, rest) = self.tab.split_at_mut(r * cols);
        let (prow, tail) = rest.split_at_mut(cols);
        let prow: &[f64] = prow;
        let beta_r = self.beta[r];
        let nz = &self.scratch_nz;
        for (i, row) in head.chunks_exact_mut(cols).chain(tail.chunks_exact_mut(cols)).enumerate() {
            let i = if i < r { i } else { i + 1 };
            let f = row[q];
            if f != 0.0 {
                for &j in nz {
                    row[j] -= f * prow[j];
                }
                row[q] = 0.0;
                self.beta[i] -= f * beta_r;
            }
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for &j in nz {
                self.reduced[j] -= f * prow[j];
            }
            self.reduced[q] = 0.0;
        }
        let old = self.basis[r];
        self.basis[r] = q;
        self.state[q] = State::Basic;
        if self.state[old] == State::Basic {
            self.state[old] = State::Lower;
        }
    }

    /// Rebuilds the tableau from the original matrix for the current basis.
    fn refactor(&mut self) {
        let wanted: Vec<usize> = self.basis.clone();
        let states = self.state.clone();
        self.reset_tableau();
        self.basis = (self.structural..self.cols).collect();
        for j in 0..self.cols {
            if self.state[j] == State::Basic {
                self.state[j] = State::Lower;
            }
        }
        for r in 0..self.m {
            self.state[self.basis[r]] = State::Basic;
        }
        let cols = self.cols;
        let mut assigned = vec![false; self.m];
        let mut pending = Vec::new();
        for &v in &wanted {
            if v >= self.structural {
                // slack already basic in its own row
                let r = v - self.structural;
                if !assigned[r] {
                    assigned[r] = true;
                    continue;
                }
            }
            pending.push(v);
        }
        let mut dropped = Vec::new();
        for v in pending {
            let mut best = None;
            let mut mag = 1e-11;
            for r in 0..self.m {
                if !assigned[r] {
                    let t = self.tab[r * cols + v].abs();
                    if t > mag {
                        mag = t;
                        best = Some(r);
                    }
                }
            }
            match best {
                Some(r) => {
                    self.pivot(r, v);
                    assigned[r] = true;
                }
                None => dropped.push(v),
            }
        }
        for j in 0..self.cols {
            if self.state[j] != State::Basic {
                self.state[j] = match states[j] {
                    State::Basic => self.resting_state(j),
                    s => s,
                };
            }
        }
        for v in dropped {
            self.state[v] = self.resting_state(v);
        }
        self.pivots_since_refactor = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(n: usize) -> LinearProgram {
        LinearProgram::new(n)
    }

    #[test]
    fn single_variable_cap() {
        let mut p = lp(0);
        let x = p.add_var(0.0, 10.0, 1.0);
        p.add_constraint(vec![(x, 1.0)], Relation::Le, 3.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_pair() {
        let mut p = lp(0);
        let x = p.add_var(0.0, 10.0, 1.0);
        p.add_constraint(vec![(x, 1.0)], Relation::Le, 1.0);
        p.add_constraint(vec![(x, 1.0)], Relation::Ge, 2.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut p = lp(0);
        let x = p.add_var(0.0, f64::INFINITY, 1.0);
        let y = p.add_var(0.0, f64::INFINITY, 0.0);
        p.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn classic_two_variable() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let mut p = lp(2);
        p.objective = vec![3.0, 5.0];
        p.add_constraint(vec![(0, 1.0)], Relation::Le, 4.0);
        p.add_constraint(vec![(1, 2.0)], Relation::Le, 12.0);
        p.add_constraint(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x + y (max -x - y) with x free, x + y = 2, x - y >= 1, y >= -5
        let mut p = lp(0);
        let x = p.add_var(f64::NEG_INFINITY, f64::INFINITY, -1.0);
        let y = p.add_var(-5.0, f64::INFINITY, -1.0);
        p.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Eq, 2.0);
        p.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Ge, 1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 2.0).abs() < 1e-9);
        assert!((s.x[0] + s.x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_inverted_bounds() {
        let mut p = lp(0);
        p.add_var(1.0, 0.0, 1.0);
        assert!(solve_lp(&p).is_err());
    }

    #[test]
    fn resolve_after_bound_change() {
        // max x + y, x + 2y <= 4, 3x + y <= 6, x,y in [0, 10]
        let mut p = lp(0);
        let x = p.add_var(0.0, 10.0, 1.0);
        let y = p.add_var(0.0, 10.0, 1.0);
        p.add_constraint(vec![(x, 1.0), (y, 2.0)], Relation::Le, 4.0);
        p.add_constraint(vec![(x, 3.0), (y, 1.0)], Relation::Le, 6.0);
        let mut s = Simplex::new(&p).unwrap();
        assert_eq!(s.solve().unwrap(), LpStatus::Optimal);
        assert!((s.objective_value() - 2.8).abs() < 1e-9);
        s.set_bounds(x, 0.0, 1.0);
        assert_eq!(s.solve().unwrap(), LpStatus::Optimal);
        assert!((s.objective_value() - 2.5).abs() < 1e-9);
        s.set_bounds(x, 5.0, 10.0);
        assert_eq!(s.solve().unwrap(), LpStatus::Infeasible);
        s.set_bounds(x, 0.0, 10.0);
        assert_eq!(s.solve().unwrap(), LpStatus::Optimal);
        assert!((s.objective_value() - 2.8).abs() < 1e-9);
    }
}

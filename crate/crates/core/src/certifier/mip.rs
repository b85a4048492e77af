//! Branch-and-bound over binary variables on top of the bounded simplex.
//!
//! Every node re-solves the relaxation on one shared tableau after changing
//! binary bounds, so the dual simplex restarts from the parent's basis.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{contract, Error, Result};

use super::encode::MipProblem;
use super::lp::{LinearProgram, LpStatus, Simplex};

/// Relaxation bounds within this of the incumbent are pruned.
pub const PRUNE_TOL: f64 = 1e-9;
/// Binary values this close to 0 or 1 count as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const DEFAULT_NODE_BUDGET: usize = 5_000_000;

#[derive(Debug, Clone)]
pub struct MipOutcome {
    /// Best objective found (objective constant included); `-inf` if none.
    pub optimum: f64,
    /// Full variable assignment attaining `optimum`.
    pub assignment: Vec<f64>,
    pub nodes: usize,
    /// True when the node budget ran out before the tree was closed.
    pub exhausted: bool,
    /// Upper bound on the true optimum; equals `optimum` when not exhausted.
    pub best_bound: f64,
}

/// Heuristic turning a relaxation point into a feasible `(value, assignment)`.
pub type Completion<'a> = dyn Fn(&[f64]) -> (f64, Vec<f64>) + 'a;

pub fn solve_mip(problem: &MipProblem, budget: usize) -> Result<MipOutcome> {
    let complete = |x: &[f64]| {
        let (profile, full) = problem.complete(x);
        (problem.evaluate(&profile), full)
    };
    solve_binary_program(&problem.lp, &problem.binaries, problem.objective_constant, budget, Some(&complete))
}

#[derive(Debug, Clone)]
struct Open {
    bound: f64,
    seq: usize,
    fixings: Vec<(u32, bool)>,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    // best bound first, most recent on ties
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then(self.seq.cmp(&other.seq))
    }
}

/// Maximizes `lp` with the listed variables restricted to {0, 1}.
pub fn solve_binary_program(
    lp: &LinearProgram,
    binaries: &[usize],
    constant: f64,
    budget: usize,
    completion: Option<&Completion<'_>>,
) -> Result<MipOutcome> {
    if budget == 0 {
        return Err(contract("node budget must be positive"));
    }
    for &b in binaries {
        if b >= lp.num_vars() {
            return Err(contract(format!("binary index {b} out of range")));
        }
        if lp.lower[b] < 0.0 || lp.upper[b] > 1.0 {
            return Err(contract(format!("binary {b} has bounds outside [0, 1]")));
        }
    }
    let mut simplex = Simplex::new(lp)?;
    let base: Vec<(f64, f64)> = binaries.iter().map(|&b| (lp.lower[b], lp.upper[b])).collect();
    let mut applied: Vec<Option<bool>> = vec![None; binaries.len()];
    let mut desired: Vec<Option<bool>> = vec![None; binaries.len()];

    let mut incumbent = f64::NEG_INFINITY;
    let mut best: Vec<f64> = Vec::new();
    let mut nodes = 0usize;
    let mut seq = 0usize;
    let mut heap: BinaryHeap<Open> = BinaryHeap::new();
    let mut current = Some(Open { bound: f64::INFINITY, seq, fixings: Vec::new() });
    let mut exhausted = false;

    loop {
        let node = match current.take() {
            Some(node) => node,
            None => match heap.pop() {
                Some(node) if node.bound > incumbent + PRUNE_TOL => node,
                // the heap is ordered by bound, so nothing left can improve
                _ => break,
            },
        };
        if nodes >= budget {
            exhausted = true;
            heap.push(node);
            break;
        }
        nodes += 1;

        desired.iter_mut().for_each(|d| *d = None);
        for &(k, v) in &node.fixings {
            desired[k as usize] = Some(v);
        }
        for k in 0..binaries.len() {
            if desired[k] != applied[k] {
                let (l, u) = match desired[k] {
                    Some(true) => (1.0, 1.0),
                    Some(false) => (0.0, 0.0),
                    None => base[k],
                };
                simplex.set_bounds(binaries[k], l, u);
                applied[k] = desired[k];
            }
        }

        match simplex.solve()? {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(Error::Solver("unbounded relaxation".into())),
            LpStatus::Optimal => {}
        }
        let bound = simplex.objective_value() + constant;
        if bound <= incumbent + PRUNE_TOL {
            continue;
        }
        let x = simplex.primal();
        if let Some(complete) = completion {
            let (value, full) = complete(&x);
            if value > incumbent {
                incumbent = value;
                best = full;
            }
            if bound <= incumbent + PRUNE_TOL {
                continue;
            }
        }

        let mut branch: Option<(usize, f64)> = None;
        for (k, &b) in binaries.iter().enumerate() {
            let frac = x[b].min(1.0 - x[b]);
            if frac > INTEGRALITY_TOL && branch.map_or(true, |(_, f)| frac > f) {
                branch = Some((k, frac));
            }
        }
        let Some((k, _)) = branch else {
            if bound > incumbent {
                incumbent = bound;
                best = x;
            }
            continue;
        };

        let up_first = x[binaries[k]] >= 0.5;
        let mut first = node.fixings.clone();
        first.push((k as u32, up_first));
        let mut second = node.fixings;
        second.push((k as u32, !up_first));
        seq += 1;
        heap.push(Open { bound, seq, fixings: second });
        seq += 1;
        current = Some(Open { bound, seq, fixings: first });
    }

    let best_bound = if exhausted {
        heap.iter().map(|o| o.bound).fold(incumbent, f64::max)
    } else {
        incumbent
    };
    Ok(MipOutcome { optimum: incumbent, assignment: best, nodes, exhausted, best_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certifier::lp::Relation;

    #[test]
    fn knapsack() {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 5 (binary) -> a + c... = 5 + 3 = 8 with b=0? 2+1=3 -> add b? 2+3=5 -> 9
        let mut lp = LinearProgram::new(0);
        let a = lp.add_var(0.0, 1.0, 5.0);
        let b = lp.add_var(0.0, 1.0, 4.0);
        let c = lp.add_var(0.0, 1.0, 3.0);
        lp.add_constraint(vec![(a, 2.0), (b, 3.0), (c, 1.0)], Relation::Le, 5.0);
        let out = solve_binary_program(&lp, &[a, b, c], 0.0, 1000, None).unwrap();
        assert!((out.optimum - 9.0).abs() < 1e-12);
        assert!(!out.exhausted);
        assert_eq!(out.assignment[a].round(), 1.0);
        assert_eq!(out.assignment[b].round(), 1.0);
    }

    #[test]
    fn fixed_binaries_give_lp_optimum() {
        let mut lp = LinearProgram::new(0);
        let a = lp.add_var(1.0, 1.0, 1.0);
        let x = lp.add_var(0.0, 10.0, 2.0);
        lp.add_constraint(vec![(x, 1.0), (a, -3.0)], Relation::Le, 0.5);
        let out = solve_binary_program(&lp, &[a], 0.25, 10, None).unwrap();
        assert!((out.optimum - (1.0 + 7.0 + 0.25)).abs() < 1e-12);
        assert_eq!(out.nodes, 1);
    }

    #[test]
    fn infeasible_program() {
        let mut lp = LinearProgram::new(0);
        let a = lp.add_var(0.0, 1.0, 1.0);
        lp.add_constraint(vec![(a, 2.0)], Relation::Eq, 1.0);
        let out = solve_binary_program(&lp, &[a], 0.0, 10, None).unwrap();
        assert_eq!(out.optimum, f64::NEG_INFINITY);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let mut lp = LinearProgram::new(0);
        let vars: Vec<usize> = (0..12).map(|i| lp.add_var(0.0, 1.0, 1.0 + 0.01 * i as f64)).collect();
        lp.add_constraint(vars.iter().map(|&v| (v, 2.0)).collect(), Relation::Le, 11.0);
        let out = solve_binary_program(&lp, &vars, 0.0, 2, None).unwrap();
        assert!(out.exhausted);
        assert!(out.best_bound >= out.optimum);
        assert!(solve_binary_program(&lp, &vars, 0.0, 0, None).is_err());
    }
}

//! Exact worst-case violations of a network via two MIPs, plus a
//! brute-force grid scan used as an independent oracle.

pub mod encode;
pub mod lp;
pub mod mip;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanism::{margins, s_value, Mechanism, TypeProfile};
use crate::net::Mlp;

pub use encode::{
    activation_bounds, build_left_mip, build_right_mip, sorted_activation_bounds, Interval, MipProblem,
    NodeVars, Side,
};
pub use lp::{solve_lp, Constraint, LinearProgram, LpSolution, LpStatus, Relation};
pub use mip::{solve_binary_program, solve_mip, MipOutcome, DEFAULT_NODE_BUDGET};

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    /// Branch-and-bound node limit per MIP.
    pub node_budget: usize,
    /// With 2 or more, the two MIPs run concurrently.
    pub threads: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { node_budget: DEFAULT_NODE_BUDGET, threads: 1 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub eps_left: f64,
    pub eps_right: f64,
    pub theta_left: TypeProfile,
    pub theta_right: TypeProfile,
    pub alpha_goal: f64,
    /// Unclamped MIP optima.
    pub left_optimum: f64,
    pub right_optimum: f64,
    pub left_nodes: usize,
    pub right_nodes: usize,
    /// False when either MIP ran out of nodes; the eps values are then lower bounds.
    pub exact: bool,
}

impl Certificate {
    pub fn gap(&self) -> f64 {
        self.eps_left + self.eps_right
    }

    /// Worst-case ratio guaranteed after shifting by `eps_left / n`.
    pub fn achieved_ratio(&self) -> f64 {
        self.alpha_goal - self.eps_left - self.eps_right
    }
}

fn run_side(net: &Mlp, n: usize, side: Side, alpha: f64, budget: usize) -> Result<(MipProblem, MipOutcome)> {
    let problem = match side {
        Side::Left => build_left_mip(net, n)?,
        Side::Right => build_right_mip(net, n, alpha)?,
    };
    let outcome = solve_mip(&problem, budget)?;
    if outcome.assignment.is_empty() {
        return Err(Error::Solver("violation MIP has no feasible point".into()));
    }
    Ok((problem, outcome))
}

pub fn certify(net: &Mlp, n: usize, alpha_goal: f64) -> Result<Certificate> {
    certify_with(net, n, alpha_goal, CertifyOptions::default())
}

pub fn certify_with(net: &Mlp, n: usize, alpha_goal: f64, options: CertifyOptions) -> Result<Certificate> {
    let budget = options.node_budget;
    let (left, right) = if options.threads >= 2 {
        std::thread::scope(|scope| {
            let handle = scope.spawn(|| run_side(net, n, Side::Left, alpha_goal, budget));
            let right = run_side(net, n, Side::Right, alpha_goal, budget);
            let left = handle.join().unwrap_or_else(|_| Err(Error::Solver("left MIP thread panicked".into())));
            (left, right)
        })
    } else {
        (
            run_side(net, n, Side::Left, alpha_goal, budget),
            run_side(net, n, Side::Right, alpha_goal, budget),
        )
    };
    let (lp_left, out_left) = left?;
    let (lp_right, out_right) = right?;
    let profile_of = |p: &MipProblem, o: &MipOutcome| {
        TypeProfile::clamped(p.theta.iter().map(|&v| o.assignment[v]).collect())
    };
    let cert = Certificate {
        eps_left: out_left.optimum.max(0.0),
        eps_right: out_right.optimum.max(0.0),
        theta_left: profile_of(&lp_left, &out_left),
        theta_right: profile_of(&lp_right, &out_right),
        alpha_goal,
        left_optimum: out_left.optimum,
        right_optimum: out_right.optimum,
        left_nodes: out_left.nodes,
        right_nodes: out_right.nodes,
        exact: !out_left.exhausted && !out_right.exhausted,
    };
    log::debug!(
        "certified n={n} alpha={alpha_goal}: eps_left={:.3e} eps_right={:.3e} nodes {}+{}",
        cert.eps_left,
        cert.eps_right,
        cert.left_nodes,
        cert.right_nodes
    );
    Ok(cert)
}

/// Certifies `net + shift` by folding the shift into the output bias.
pub fn certify_mechanism(mech: &Mechanism, alpha_goal: f64, options: CertifyOptions) -> Result<Certificate> {
    let mut net = mech.net().clone();
    net.offset_output(mech.shift());
    certify_with(&net, mech.n(), alpha_goal, options)
}

/// Largest signed margins found on a sorted grid.
#[derive(Debug, Clone, Serialize)]
pub struct GridScan {
    pub left: f64,
    pub theta_left: TypeProfile,
    pub right: f64,
    pub theta_right: TypeProfile,
    pub points: u64,
}

pub const GRID_POINT_LIMIT: u128 = 10_000_000;

/// Number of nondecreasing length-`n` sequences over `resolution` values.
fn sorted_grid_size(n: usize, resolution: usize) -> u128 {
    // C(resolution - 1 + n, n)
    let mut acc: u128 = 1;
    for k in 1..=n as u128 {
        acc = acc * (resolution as u128 - 1 + k) / k;
        if acc > u128::MAX / 1024 {
            return u128::MAX;
        }
    }
    acc
}

/// Scans every sorted profile on the grid with spacing `1/(resolution-1)`.
pub fn grid_oracle(net: &Mlp, n: usize, alpha: f64, resolution: usize) -> Result<GridScan> {
    if resolution < 2 {
        return Err(crate::error::contract("grid resolution must be at least 2"));
    }
    if n < 2 || net.input_dim() != n - 1 {
        return Err(crate::error::contract(format!(
            "network input_dim {} does not match n = {n}",
            net.input_dim()
        )));
    }
    let points = sorted_grid_size(n, resolution);
    if points > GRID_POINT_LIMIT {
        return Err(Error::GridTooLarge { points, limit: GRID_POINT_LIMIT });
    }
    let step = 1.0 / (resolution - 1) as f64;
    let mut idx = vec![0usize; n];
    let mut values = vec![0.0; n];
    let mut buf = Vec::with_capacity(n);
    let mut best_l = (f64::NEG_INFINITY, Vec::new());
    let mut best_r = (f64::NEG_INFINITY, Vec::new());
    let mut count = 0u64;
    loop {
        for (v, &i) in values.iter_mut().zip(&idx) {
            *v = if i + 1 == resolution { 1.0 } else { i as f64 * step };
        }
        let sum: f64 = values.iter().sum();
        let mut sum_h = 0.0;
        for i in 0..n {
            buf.clear();
            buf.extend(values.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, v)| *v));
            sum_h += net.eval(&buf);
        }
        let (l, r) = margins(n, sum_h, sum.max(1.0), alpha);
        if l > best_l.0 {
            best_l = (l, values.clone());
        }
        if r > best_r.0 {
            best_r = (r, values.clone());
        }
        count += 1;

        // next nondecreasing index tuple
        let Some(k) = (0..n).rev().find(|&k| idx[k] + 1 < resolution) else { break };
        let v = idx[k] + 1;
        for slot in &mut idx[k..] {
            *slot = v;
        }
    }
    let theta_left = TypeProfile::clamped(best_l.1);
    let theta_right = TypeProfile::clamped(best_r.1);
    debug_assert!((s_value(&theta_left) - theta_left.sum().max(1.0)).abs() < 1e-15);
    Ok(GridScan { left: best_l.0, theta_left, right: best_r.0, theta_right, points: count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn zero_net_left_optimum() {
        for n in [3, 4] {
            let net = Mlp::zeros(n - 1, &[2]).unwrap();
            let mip = build_left_mip(&net, n).unwrap();
            let out = solve_mip(&mip, 1000).unwrap();
            let expect = ((n - 1) * n) as f64;
            assert!((out.optimum - expect).abs() < 1e-9, "{}", out.optimum);
            let grid = grid_oracle(&net, n, 0.5, 5).unwrap();
            assert!((grid.left - expect).abs() < 1e-12);
            assert_eq!(grid.theta_left.values(), vec![1.0; n].as_slice());
        }
    }

    #[test]
    fn zero_net_right_optimum() {
        let net = Mlp::zeros(2, &[2]).unwrap();
        let out = solve_mip(&build_right_mip(&net, 3, 1.0).unwrap(), 1000).unwrap();
        assert!((out.optimum + 2.0).abs() < 1e-9);
    }

    #[test]
    fn closed_form_certifies() {
        let mech = fixtures::closed_form_n3();
        let cert = certify(mech.net(), 3, 2.0 / 3.0).unwrap();
        assert!(cert.exact);
        assert!(cert.gap() <= 1e-6, "{cert:?}");
        let over = certify(mech.net(), 3, 0.7).unwrap();
        assert!(over.right_optimum > 0.0);
    }

    #[test]
    fn grid_counts_and_guard() {
        let net = Mlp::zeros(2, &[1]).unwrap();
        assert_eq!(grid_oracle(&net, 3, 0.5, 3).unwrap().points, 10);
        assert_eq!(sorted_grid_size(3, 101), 176_851);
        let big = Mlp::zeros(5, &[1]).unwrap();
        assert!(matches!(grid_oracle(&big, 6, 0.5, 101), Err(Error::GridTooLarge { .. })));
        assert!(grid_oracle(&net, 3, 0.5, 1).is_err());
    }

    #[test]
    fn threads_agree() {
        let net = Mlp::init_random(2, &[4], 17).unwrap();
        let a = certify_with(&net, 3, 0.6, CertifyOptions { threads: 1, ..Default::default() }).unwrap();
        let b = certify_with(&net, 3, 0.6, CertifyOptions { threads: 2, ..Default::default() }).unwrap();
        assert_eq!(a.left_optimum.to_bits(), b.left_optimum.to_bits());
        assert_eq!(a.right_optimum.to_bits(), b.right_optimum.to_bits());
    }

    #[test]
    fn shift_is_folded() {
        let net = Mlp::init_random(2, &[3], 2).unwrap();
        let plain = certify(&net, 3, 0.6).unwrap();
        let mech = Mechanism::new(3, net, 0.05).unwrap();
        let shifted = certify_mechanism(&mech, 0.6, CertifyOptions::default()).unwrap();
        assert!((shifted.left_optimum - (plain.left_optimum - 0.15)).abs() < 1e-9);
        assert!((shifted.right_optimum - (plain.right_optimum + 0.15)).abs() < 1e-9);
    }
}

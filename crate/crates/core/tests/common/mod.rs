// Independent oracles shared by the property and acceptance targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use redistrib::certifier::{solve_lp, LpStatus, MipProblem};
use redistrib::{Mlp, TypeProfile};

/// Random net with fan-in weights and biases drawn from [-0.5, 0.5].
pub fn random_net(input_dim: usize, hidden: &[usize], seed: u64) -> Mlp {
    let mut net = Mlp::init_random(input_dim, hidden, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut offset = 0;
    let spans: Vec<(usize, usize)> = net
        .layers()
        .iter()
        .map(|l| {
            let w = l.inputs() * l.outputs();
            let span = (offset + w, offset + w + l.outputs());
            offset += w + l.outputs();
            span
        })
        .collect();
    for (i, p) in net.params_mut().enumerate() {
        if spans.iter().any(|&(a, b)| i >= a && i < b) {
            *p = rng.gen_range(-0.5..0.5);
        }
    }
    net
}

pub fn random_sorted(n: usize, rng: &mut impl Rng) -> TypeProfile {
    TypeProfile::new((0..n).map(|_| rng.gen::<f64>()).collect()).unwrap()
}

/// Maximum over all fixings of the binaries of the LP with those fixings.
/// Each fixed LP is exact on its activation region, so this is the true optimum.
pub fn enumerate_patterns(problem: &MipProblem) -> f64 {
    let free: Vec<usize> = problem
        .binaries
        .iter()
        .copied()
        .filter(|&b| problem.lp.lower[b] < problem.lp.upper[b])
        .collect();
    assert!(free.len() <= 16, "too many patterns");
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << free.len()) {
        let mut lp = problem.lp.clone();
        for (k, &b) in free.iter().enumerate() {
            let v = f64::from((mask >> k) & 1);
            lp.lower[b] = v;
            lp.upper[b] = v;
        }
        let sol = solve_lp(&lp).unwrap();
        if sol.status == LpStatus::Optimal {
            best = best.max(sol.objective + problem.objective_constant);
        }
    }
    best
}

/// Central-difference gradient of `Σ upstream_k * net(x_k)`.
pub fn finite_difference(net: &Mlp, batch: &[(Vec<f64>, f64)], step: f64) -> Vec<f64> {
    let loss = |m: &Mlp| batch.iter().map(|(x, u)| u * m.eval(x)).sum::<f64>();
    let count = net.param_count();
    (0..count)
        .map(|i| {
            let mut plus = net.clone();
            *plus.params_mut().nth(i).unwrap() += step;
            let mut minus = net.clone();
            *minus.params_mut().nth(i).unwrap() -= step;
            (loss(&plus) - loss(&minus)) / (2.0 * step)
        })
        .collect()
}

/// Largest relative error between analytic and central-difference gradients
/// for a random batch kept away from ReLU kinks.
pub fn gradient_error(net: &Mlp, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batch = Vec::new();
    let mut trace = redistrib::net::Trace::default();
    while batch.len() < 8 {
        let x: Vec<f64> = (0..net.input_dim()).map(|_| rng.gen()).collect();
        net.forward_trace(&x, &mut trace);
        let clear = (0..net.hidden_layers().len()).all(|l| trace.pre_activations(l).iter().all(|v| v.abs() > 1e-3));
        if clear {
            batch.push((x, rng.gen_range(-1.0..1.0)));
        }
    }
    let analytic = net.gradients(&batch).unwrap();
    let numeric = finite_difference(net, &batch, 1e-5);
    analytic
        .values()
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

//! Big-M encodings of the worst-case violation problems.
//!
//! Variables: the sorted profile `θ_1..θ_n` in `[0,1]`, the first-best
//! utility `s` with its indicator `b`, and for every agent copy `i` (the
//! network evaluated on `θ_{-i}`) and every hidden node a post-activation `y`
//! with activation indicator `a`:
//!
//! ```text
//! y >= z,   y <= z + M⁻(1 - a),   y <= M⁺ a,   y >= 0
//! s >= Σθ,  s >= 1,  s <= Σθ + M_s(1 - b),  s <= 1 + M_s b
//! ```

use crate::error::{contract, Error, Result};
use crate::mechanism::{margins, s_value, sum_h_raw, TypeProfile};
use crate::net::Mlp;

use super::lp::{LinearProgram, Relation};

/// Closed interval of a pre-activation value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }
}

/// Pre-activation intervals of every hidden node for inputs in the box
/// `[0,1]^input_dim`, by layer-wise interval arithmetic.
pub fn activation_bounds(net: &Mlp) -> Vec<Vec<Interval>> {
    let first = vec![Interval { lo: 0.0, hi: 1.0 }; net.input_dim()];
    propagate(net, None, first)
}

/// Like [`activation_bounds`] but for sorted inputs
/// `0 <= x_1 <= ... <= x_d <= 1`. The first hidden layer is exact: a linear
/// function over that simplex attains its extremes at the vertices
/// `(0,..,0,1,..,1)`.
pub fn sorted_activation_bounds(net: &Mlp) -> Vec<Vec<Interval>> {
    let d = net.input_dim();
    let first = net.hidden_layers().first().map(|layer| {
        (0..layer.outputs())
            .map(|r| {
                let row = layer.row(r);
                let mut acc = layer.bias(r);
                let (mut lo, mut hi) = (acc, acc);
                for c in (0..d).rev() {
                    acc += row[c];
                    lo = lo.min(acc);
                    hi = hi.max(acc);
                }
                Interval { lo, hi }
            })
            .collect::<Vec<_>>()
    });
    propagate(net, first, Vec::new())
}

fn propagate(net: &Mlp, exact_first: Option<Vec<Interval>>, input: Vec<Interval>) -> Vec<Vec<Interval>> {
    let mut out = Vec::new();
    let mut src = input;
    for (l, layer) in net.hidden_layers().iter().enumerate() {
        let pre: Vec<Interval> = match (&exact_first, l) {
            (Some(first), 0) => first.clone(),
            _ => (0..layer.outputs())
                .map(|r| {
                    let mut lo = layer.bias(r);
                    let mut hi = lo;
                    for (w, iv) in layer.row(r).iter().zip(&src) {
                        if *w >= 0.0 {
                            lo += w * iv.lo;
                            hi += w * iv.hi;
                        } else {
                            lo += w * iv.hi;
                            hi += w * iv.lo;
                        }
                    }
                    Interval { lo, hi }
                })
                .collect(),
        };
        src = pre.iter().map(|iv| Interval { lo: iv.lo.max(0.0), hi: iv.hi.max(0.0) }).collect();
        out.push(pre);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Maximize `(n-1)s - Σh`.
    Left,
    /// Maximize `Σh - (n-α)s`.
    Right,
}

/// Variables and big-M constants of one hidden node in one agent copy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeVars {
    pub copy: usize,
    pub layer: usize,
    pub node: usize,
    pub y: usize,
    pub a: usize,
    pub m_plus: f64,
    pub m_minus: f64,
}

/// A worst-case violation MIP for one network and one side.
#[derive(Debug, Clone)]
pub struct MipProblem {
    pub lp: LinearProgram,
    /// Binary variables in branching order (all ReLU indicators, then `b`).
    pub binaries: Vec<usize>,
    pub theta: Vec<usize>,
    pub s_var: usize,
    pub s_binary: usize,
    pub s_big_m: f64,
    pub nodes: Vec<NodeVars>,
    /// Added to the LP objective to get the violation value.
    pub objective_constant: f64,
    pub side: Side,
    pub alpha: f64,
    pub n: usize,
    pub(crate) net: Mlp,
}

impl MipProblem {
    pub fn binary_count(&self) -> usize {
        self.binaries.len()
    }

    /// Violation value (unclamped) of the problem's side at `profile`.
    pub fn evaluate(&self, profile: &TypeProfile) -> f64 {
        let (l, r) = margins(self.n, sum_h_raw(&self.net, 0.0, profile), s_value(profile), self.alpha);
        match self.side {
            Side::Left => l,
            Side::Right => r,
        }
    }

    /// Feasible full assignment for the profile in `x`'s θ coordinates.
    pub fn complete(&self, x: &[f64]) -> (TypeProfile, Vec<f64>) {
        let profile = TypeProfile::clamped(self.theta.iter().map(|&v| x[v]).collect());
        let mut full = vec![0.0; self.lp.num_vars()];
        for (k, &v) in self.theta.iter().enumerate() {
            full[v] = profile.values()[k];
        }
        let s = s_value(&profile);
        full[self.s_var] = s;
        full[self.s_binary] = if profile.sum() >= 1.0 { 1.0 } else { 0.0 };
        let mut trace = crate::net::Trace::default();
        for copy in 0..self.n {
            let input = profile.without(copy);
            self.net.forward_trace(&input, &mut trace);
            for nv in self.nodes.iter().filter(|nv| nv.copy == copy) {
                let z = trace.pre_activations(nv.layer)[nv.node];
                full[nv.y] = z.max(0.0);
                full[nv.a] = if z > 0.0 { 1.0 } else { 0.0 };
            }
        }
        (profile, full)
    }
}

pub fn build_left_mip(net: &Mlp, n: usize) -> Result<MipProblem> {
    build(net, n, Side::Left, 0.0)
}

pub fn build_right_mip(net: &Mlp, n: usize, alpha: f64) -> Result<MipProblem> {
    // negative goals come up when re-certifying poor shifted networks
    if !alpha.is_finite() {
        return Err(contract(format!("alpha must be finite, got {alpha}")));
    }
    build(net, n, Side::Right, alpha)
}

fn build(net: &Mlp, n: usize, side: Side, alpha: f64) -> Result<MipProblem> {
    if n < 2 || net.input_dim() != n - 1 {
        return Err(contract(format!("network input_dim {} does not match n = {n}", net.input_dim())));
    }
    let bounds = sorted_activation_bounds(net);
    if bounds.iter().flatten().any(|iv| !iv.lo.is_finite() || !iv.hi.is_finite()) {
        return Err(Error::Construction("non-finite activation bound".into()));
    }
    let nf = n as f64;
    // sign applied to Σ out_i in the objective
    let h_sign = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    let s_cost = match side {
        Side::Left => nf - 1.0,
        Side::Right => -(nf - alpha),
    };

    let mut lp = LinearProgram::new(0);
    let theta: Vec<usize> = (0..n).map(|_| lp.add_var(0.0, 1.0, 0.0)).collect();
    let s_var = lp.add_var(1.0, nf, s_cost);
    for k in 0..n - 1 {
        lp.add_constraint(vec![(theta[k], 1.0), (theta[k + 1], -1.0)], Relation::Le, 0.0);
    }

    let out_layer = net.output_layer();
    let hidden = net.hidden_layers();
    let mut nodes = Vec::new();
    let mut constant = 0.0;
    for copy in 0..n {
        // input c of copy i reads θ_c for c < i and θ_{c+1} otherwise
        let inputs: Vec<usize> = (0..n - 1).map(|c| theta[if c < copy { c } else { c + 1 }]).collect();
        let mut src = inputs.clone();
        for (l, layer) in hidden.iter().enumerate() {
            let mut next = Vec::with_capacity(layer.outputs());
            for k in 0..layer.outputs() {
                let iv = bounds[l][k];
                let m_plus = iv.hi.max(0.0);
                let m_minus = (-iv.lo).max(0.0);
                let y = lp.add_var(0.0, m_plus, 0.0);
                let a = lp.add_var(0.0, 1.0, 0.0);
                let bias = layer.bias(k);
                let z_terms = |scale: f64| -> Vec<(usize, f64)> {
                    src.iter()
                        .zip(layer.row(k))
                        .filter(|(_, w)| **w != 0.0)
                        .map(|(&v, &w)| (v, scale * w))
                        .collect()
                };
                if iv.hi <= 0.0 {
                    lp.upper[a] = 0.0;
                } else if iv.lo >= 0.0 {
                    lp.lower[a] = 1.0;
                    // y = z
                    let mut row = vec![(y, 1.0)];
                    row.extend(z_terms(-1.0));
                    lp.add_constraint(row, Relation::Eq, bias);
                } else {
                    let mut ge = vec![(y, 1.0)];
                    ge.extend(z_terms(-1.0));
                    lp.add_constraint(ge, Relation::Ge, bias);
                    let mut le = vec![(y, 1.0), (a, m_minus)];
                    le.extend(z_terms(-1.0));
                    lp.add_constraint(le, Relation::Le, bias + m_minus);
                    lp.add_constraint(vec![(y, 1.0), (a, -m_plus)], Relation::Le, 0.0);
                }
                nodes.push(NodeVars { copy, layer: l, node: k, y, a, m_plus, m_minus });
                next.push(y);
            }
            src = next;
        }
        for (k, &v) in src.iter().enumerate() {
            lp.objective[v] += h_sign * out_layer.weight(0, k);
        }
        if let Some(skip) = net.skip() {
            for (c, &v) in inputs.iter().enumerate() {
                lp.objective[v] += h_sign * skip[c];
            }
        }
        constant += h_sign * out_layer.bias(0);
    }

    let s_big_m = nf - 1.0;
    let s_binary = lp.add_var(0.0, 1.0, 0.0);
    let mut row = vec![(s_var, 1.0)];
    row.extend(theta.iter().map(|&t| (t, -1.0)));
    lp.add_constraint(row.clone(), Relation::Ge, 0.0);
    row.push((s_binary, s_big_m));
    lp.add_constraint(row, Relation::Le, s_big_m);
    lp.add_constraint(vec![(s_var, 1.0), (s_binary, -s_big_m)], Relation::Le, 1.0);

    let mut binaries: Vec<usize> = nodes.iter().map(|nv| nv.a).collect();
    binaries.push(s_binary);
    Ok(MipProblem {
        lp,
        binaries,
        theta,
        s_var,
        s_binary,
        s_big_m,
        nodes,
        objective_constant: constant,
        side,
        alpha,
        n,
        net: net.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Dense;

    fn two_node() -> Mlp {
        let hidden = Dense::from_rows(vec![vec![1.0, 1.0], vec![5.0, 3.0]], vec![-1.0, -2.0]).unwrap();
        let out = Dense::from_rows(vec![vec![2.0 / 3.0, 1.0 / 6.0]], vec![2.0 / 3.0]).unwrap();
        Mlp::new(2, vec![hidden, out], None).unwrap()
    }

    #[test]
    fn interval_examples() {
        let b = activation_bounds(&two_node());
        assert_eq!(b[0][0], Interval { lo: -1.0, hi: 1.0 });
        assert_eq!(b[0][1], Interval { lo: -2.0, hi: 6.0 });

        let hidden = Dense::from_rows(vec![vec![0.0, 0.0]], vec![0.7]).unwrap();
        let out = Dense::from_rows(vec![vec![1.0]], vec![0.0]).unwrap();
        let net = Mlp::new(2, vec![hidden, out], None).unwrap();
        assert_eq!(activation_bounds(&net)[0][0], Interval { lo: 0.7, hi: 0.7 });
    }

    #[test]
    fn sorted_bounds_are_tighter() {
        let hidden = Dense::from_rows(vec![vec![1.0, -1.0]], vec![0.0]).unwrap();
        let out = Dense::from_rows(vec![vec![1.0]], vec![0.0]).unwrap();
        let net = Mlp::new(2, vec![hidden, out], None).unwrap();
        assert_eq!(activation_bounds(&net)[0][0], Interval { lo: -1.0, hi: 1.0 });
        assert_eq!(sorted_activation_bounds(&net)[0][0], Interval { lo: -1.0, hi: 0.0 });
    }

    #[test]
    fn binary_counts() {
        let mip = build_left_mip(&two_node(), 3).unwrap();
        assert_eq!(mip.binary_count(), 7);
        let net = Mlp::init_random(4, &[20], 3).unwrap();
        assert_eq!(build_right_mip(&net, 5, 0.7).unwrap().binary_count(), 101);
        let deep = Mlp::init_random(2, &[3, 2], 3).unwrap();
        assert_eq!(build_left_mip(&deep, 3).unwrap().binary_count(), 16);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        assert!(build_left_mip(&two_node(), 4).is_err());
        assert!(build_right_mip(&two_node(), 3, f64::NAN).is_err());
    }

    #[test]
    fn completion_matches_direct_evaluation() {
        let net = Mlp::init_random(2, &[4, 3], 9).unwrap();
        let mip = build_left_mip(&net, 3).unwrap();
        let x: Vec<f64> = {
            let mut v = vec![0.0; mip.lp.num_vars()];
            v[mip.theta[0]] = 0.2;
            v[mip.theta[1]] = 0.5;
            v[mip.theta[2]] = 0.9;
            v
        };
        let (profile, full) = mip.complete(&x);
        let lp_value: f64 =
            mip.lp.objective.iter().zip(&full).map(|(c, v)| c * v).sum::<f64>() + mip.objective_constant;
        assert!((lp_value - mip.evaluate(&profile)).abs() < 1e-12);
        // the completed point satisfies every row
        for c in &mip.lp.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * full[j]).sum();
            match c.relation {
                Relation::Le => assert!(lhs <= c.rhs + 1e-9),
                Relation::Ge => assert!(lhs >= c.rhs - 1e-9),
                Relation::Eq => assert!((lhs - c.rhs).abs() < 1e-9),
            }
        }
    }
}

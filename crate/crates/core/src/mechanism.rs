//! VCG redistribution mechanisms for the binary non-excludable public project.
//!
//! Every constraint on the Groves term `h` collapses into one two-sided
//! inequality over all type profiles:
//!
//! ```text
//! (n - 1) s(θ)  <=  Σ_i h(θ_{-i})  <=  (n - α) s(θ),      s(θ) = max(Σθ, 1)
//! ```
//!
//! The left side is non-deficit, the right side says the worst-case
//! allocative efficiency ratio is at least `α`.

use std::fmt;
use std::str::FromStr;

use crate::error::{contract, Error, Result};
use crate::io;
use crate::net::Mlp;

/// Sorted vector of agent valuations, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(transparent)]
pub struct TypeProfile {
    values: Vec<f64>,
}

impl TypeProfile {
    /// Validates the range and sorts ascending.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(contract("type profile must be nonempty"));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(contract(format!("valuation {v} outside [0, 1]")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    /// Clamps to `[0, 1]` and sorts; used for solver output that may sit a
    /// rounding error outside the box.
    pub fn clamped(values: Vec<f64>) -> Self {
        let values = values.into_iter().map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) + 0.0 }).collect();
        Self::new(values).expect("clamped values are valid")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// The sorted profile with agent `i` removed, which is still sorted.
    pub fn without(&self, i: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len() - 1);
        self.write_without(i, &mut out);
        out
    }

    pub(crate) fn write_without(&self, i: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.values[..i]);
        out.extend_from_slice(&self.values[i + 1..]);
    }
}

impl fmt::Display for TypeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for TypeProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .split(',')
            .enumerate()
            .map(|(i, tok)| {
                tok.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: 1,
                    column: i + 1,
                    message: format!("bad valuation {tok:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }
}

/// Parses one profile per line; blank lines are skipped.
pub fn parse_profiles(text: &str) -> Result<Vec<TypeProfile>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(ln, l)| {
            l.parse::<TypeProfile>().map_err(|e| match e {
                Error::Parse { column, message, .. } => Error::Parse { line: ln + 1, column, message },
                other => other,
            })
        })
        .collect()
}

pub fn format_profiles(profiles: &[TypeProfile]) -> String {
    profiles.iter().map(|p| format!("{p}\n")).collect()
}

/// First-best total utility `max(Σθ, 1)`.
pub fn s_value(profile: &TypeProfile) -> f64 {
    profile.sum().max(1.0)
}

/// A Groves term `h' = net + shift` for `n` agents.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    n: usize,
    net: Mlp,
    shift: f64,
}

impl Mechanism {
    pub fn new(n: usize, net: Mlp, shift: f64) -> Result<Self> {
        if n < 2 || net.input_dim() != n - 1 {
            return Err(contract(format!(
                "network input_dim {} does not match n - 1 for n = {n}",
                net.input_dim()
            )));
        }
        if !shift.is_finite() {
            return Err(contract("shift must be finite"));
        }
        Ok(Self { n, net, shift })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn into_net(self) -> Mlp {
        self.net
    }

    /// `h'(x) = net(x) + shift` on a sorted `n - 1` vector.
    pub fn h(&self, others: &[f64]) -> f64 {
        self.net.eval(others) + self.shift
    }

    pub fn to_text(&self) -> String {
        io::write_network(&self.net, self.n, self.shift)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (net, n, shift) = io::read_network(text)?;
        Self::new(n, net, shift)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn check_len(n: usize, profile: &TypeProfile) -> Result<()> {
    if profile.len() != n {
        return Err(contract(format!("profile has {} agents, mechanism has {n}", profile.len())));
    }
    Ok(())
}

/// `Σ_i net(θ_{-i}) + n * shift` without length checks.
pub(crate) fn sum_h_raw(net: &Mlp, shift: f64, profile: &TypeProfile) -> f64 {
    let mut buf = Vec::with_capacity(profile.len());
    (0..profile.len())
        .map(|i| {
            profile.write_without(i, &mut buf);
            net.eval(&buf) + shift
        })
        .sum()
}

pub fn sum_h(mech: &Mechanism, profile: &TypeProfile) -> Result<f64> {
    check_len(mech.n, profile)?;
    Ok(sum_h_raw(&mech.net, mech.shift, profile))
}

/// Amounts by which the two sides of the constraint inequality are violated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violations {
    /// Non-deficit violation `max(0, (n-1)s - Σh)`.
    pub left: f64,
    /// Ratio-goal violation `max(0, Σh - (n-α)s)`.
    pub right: f64,
}

impl Violations {
    pub fn total(&self) -> f64 {
        self.left + self.right
    }
}

/// Signed margins `((n-1)s - Σh, Σh - (n-α)s)`; positive means violated.
pub fn margins(n: usize, sum_h: f64, s: f64, alpha: f64) -> (f64, f64) {
    let nf = n as f64;
    ((nf - 1.0) * s - sum_h, sum_h - (nf - alpha) * s)
}

pub fn violations(mech: &Mechanism, profile: &TypeProfile, alpha: f64) -> Result<Violations> {
    net_violations(&mech.net, mech.n, mech.shift, profile, alpha)
}

/// Violations of a bare network plus shift; the certifier's view of `h`.
pub fn net_violations(
    net: &Mlp,
    n: usize,
    shift: f64,
    profile: &TypeProfile,
    alpha: f64,
) -> Result<Violations> {
    check_len(n, profile)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(contract(format!("alpha {alpha} outside [0, 1]")));
    }
    let (l, r) = margins(n, sum_h_raw(net, shift, profile), s_value(profile), alpha);
    Ok(Violations { left: l.max(0.0), right: r.max(0.0) })
}

/// Outcome of running the mechanism on one profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Payments {
    pub build: bool,
    /// Amount each agent receives, in sorted profile order.
    pub received: Vec<f64>,
}

impl Payments {
    pub fn total_received(&self) -> f64 {
        self.received.iter().sum()
    }
}

pub fn payments(mech: &Mechanism, profile: &TypeProfile) -> Result<Payments> {
    check_len(mech.n, profile)?;
    let n = mech.n as f64;
    let total = profile.sum();
    let build = total >= 1.0;
    let received = (0..mech.n)
        .map(|i| {
            let h = mech.h(&profile.without(i));
            if build {
                total - profile.values[i] - h
            } else {
                (n - 1.0) / n - h
            }
        })
        .collect();
    Ok(Payments { build, received })
}

/// Agents' total utility: valuation (or retained cost shares) plus payments.
pub fn total_utility(mech: &Mechanism, profile: &TypeProfile) -> Result<f64> {
    let p = payments(mech, profile)?;
    let base = if p.build { profile.sum() } else { 1.0 };
    Ok(base + p.total_received())
}

/// Adds `eps_left / n` to `h`, which restores non-deficit everywhere at a
/// cost of at most `eps_left + eps_right` in the ratio.
pub fn shift_to_feasible(net: Mlp, eps_left: f64, n: usize) -> Result<Mechanism> {
    if !(eps_left >= 0.0) {
        return Err(contract(format!("eps_left must be nonnegative, got {eps_left}")));
    }
    Mechanism::new(n, net, eps_left / n as f64)
}

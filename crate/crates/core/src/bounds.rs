//! Reference ratios: the best manual lower bound `(n+1)/(2n)` and the upper
//! bound implied by the profiles whose entries are all `0` or `1/⌊n/2⌋`.
//!
//! With `c = 1/⌊n/2⌋` and `h_j` the value of `h` at the sorted vector holding
//! `j` copies of `c` and `n-1-j` zeros, the profile with `k` agents at `c`
//! gives `Σh = k h_{k-1} + (n-k) h_k`. The upper bound is the LP
//!
//! ```text
//! max α   s.t.  (n-1) s_k <= k h_{k-1} + (n-k) h_k <= (n-α) s_k,  k = 0..n
//! ```

use serde::Serialize;

use crate::certifier::lp::{solve_lp, LinearProgram, LpStatus, Relation};
use crate::error::{Error, Result};
use crate::mechanism::{s_value, TypeProfile};

#[derive(Debug, Clone, Serialize)]
pub struct BoundResult {
    pub n: usize,
    pub alpha_upper: f64,
    pub alpha_lower_manual: f64,
    pub profiles: Vec<TypeProfile>,
    /// Optimal `h_0..h_{n-1}` of the bound LP.
    pub h_values: Vec<f64>,
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!("bounds need n >= 3, got {n}")));
    }
    Ok(())
}

pub fn manual_lower_bound(n: usize) -> Result<f64> {
    check_n(n)?;
    Ok((n + 1) as f64 / (2 * n) as f64)
}

/// The common nonzero value `1/⌊n/2⌋`.
pub fn bound_value(n: usize) -> f64 {
    1.0 / (n / 2) as f64
}

/// The `n+1` profiles with `k` entries at `1/⌊n/2⌋` and the rest 0.
pub fn bound_profiles(n: usize) -> Result<Vec<TypeProfile>> {
    check_n(n)?;
    let c = bound_value(n);
    (0..=n)
        .map(|k| {
            let mut v = vec![0.0; n];
            v[n - k..].iter_mut().for_each(|x| *x = c);
            TypeProfile::new(v)
        })
        .collect()
}

pub fn theoretical_upper_bound(n: usize) -> Result<f64> {
    Ok(bounds(n)?.alpha_upper)
}

pub fn bounds(n: usize) -> Result<BoundResult> {
    check_n(n)?;
    let profiles = bound_profiles(n)?;
    let nf = n as f64;
    let mut lp = LinearProgram::new(0);
    let alpha = lp.add_var(0.0, 1.0, 1.0);
    let h: Vec<usize> = (0..n).map(|_| lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0)).collect();
    for (k, p) in profiles.iter().enumerate() {
        let s = s_value(p);
        let mut row = Vec::new();
        if k > 0 {
            row.push((h[k - 1], k as f64));
        }
        if k < n {
            row.push((h[k], (n - k) as f64));
        }
        lp.add_constraint(row.clone(), Relation::Ge, (nf - 1.0) * s);
        row.push((alpha, s));
        lp.add_constraint(row, Relation::Le, nf * s);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!("bound LP for n = {n} ended {:?}", sol.status)));
    }
    Ok(BoundResult {
        n,
        alpha_upper: sol.x[alpha],
        alpha_lower_manual: manual_lower_bound(n)?,
        profiles,
        h_values: h.iter().map(|&v| sol.x[v]).collect(),
    })
}

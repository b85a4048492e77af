//! Worst-case training: Adam on violation loss over small batches, with the
//! exact certifier called only once the running loss is low enough, and a
//! goal ratio that moves by bisection between what has been achieved and the
//! upper bound.

use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{bound_profiles, bound_value};
use crate::certifier::{certify_with, Certificate, CertifyOptions};
use crate::error::{contract, Error, Result};
use crate::mechanism::{format_profiles, margins, parse_profiles, s_value, shift_to_feasible, Mechanism, TypeProfile};
use crate::net::{AdamState, Gradients, Mlp};

/// Batch group size for latest, earlier and random profiles.
pub const GROUP: usize = 16;

/// Violations at or below this are rounding noise and produce no gradient.
pub const GRADIENT_FLOOR: f64 = 1e-12;

/// Worst-case profiles in the order they were found.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WcpStore {
    profiles: Vec<TypeProfile>,
}

impl WcpStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, p: TypeProfile) {
        self.profiles.push(p);
    }

    pub fn extend(&mut self, ps: impl IntoIterator<Item = TypeProfile>) {
        self.profiles.extend(ps);
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[TypeProfile] {
        &self.profiles
    }

    /// The last `k` appended (fewer if the store is smaller).
    pub fn latest(&self, k: usize) -> &[TypeProfile] {
        &self.profiles[self.profiles.len().saturating_sub(k)..]
    }

    /// Everything before [`latest`](Self::latest)`(k)`.
    pub fn earlier(&self, k: usize) -> &[TypeProfile] {
        &self.profiles[..self.profiles.len().saturating_sub(k)]
    }

    pub fn to_text(&self) -> String {
        format_profiles(&self.profiles)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(Self { profiles: parse_profiles(text)? })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// `alpha_low` is achieved, `alpha_goal` is being trained for, `alpha_upper`
/// is the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoalState {
    pub alpha_low: f64,
    pub alpha_goal: f64,
    pub alpha_upper: f64,
}

impl GoalState {
    pub fn new(alpha_low: f64, alpha_upper: f64) -> Result<Self> {
        if !(alpha_low <= alpha_upper) {
            return Err(contract(format!("alpha_low {alpha_low} exceeds alpha_upper {alpha_upper}")));
        }
        Ok(Self { alpha_low, alpha_goal: alpha_low, alpha_upper })
    }
}

pub fn goal_update(state: GoalState, success: bool) -> GoalState {
    if success {
        GoalState {
            alpha_low: state.alpha_goal,
            alpha_goal: (state.alpha_upper + state.alpha_goal) / 2.0,
            alpha_upper: state.alpha_upper,
        }
    } else {
        GoalState { alpha_goal: (state.alpha_low + state.alpha_goal) / 2.0, ..state }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Full-batch Adam steps per training round.
    pub epochs_per_round: usize,
    /// Certifier calls before the run stops.
    pub mip_rounds: usize,
    /// A MIP round succeeds when `eps_left + eps_right` is at most this.
    pub success_tol: f64,
    pub seed: u64,
    /// Threshold step `unit * 2^ceil(k / period)`.
    pub threshold_unit: f64,
    pub threshold_period: usize,
    pub certify: CertifyOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            epochs_per_round: 500,
            mip_rounds: 100,
            success_tol: 1e-3,
            seed: 0,
            threshold_unit: 1e-4,
            threshold_period: 10,
            certify: CertifyOptions::default(),
        }
    }
}

impl TrainConfig {
    /// Cumulative loss threshold after `k` arrivals at the gate.
    pub fn threshold(&self, k: usize) -> f64 {
        let p = self.threshold_period.max(1);
        (1..=k).map(|j| self.threshold_unit * 2f64.powi(j.div_ceil(p) as i32)).sum()
    }
}

/// Default threshold schedule: `Σ_{j=1..k} 0.0001 * 2^ceil(j/10)`.
pub fn loss_threshold(k: usize) -> f64 {
    TrainConfig::default().threshold(k)
}

/// Each coordinate is 0, `1/⌊n/2⌋` or uniform on [0,1) with probability 1/3.
pub fn sample_random_profile(n: usize, rng: &mut impl Rng) -> TypeProfile {
    let c = bound_value(n);
    let values = (0..n)
        .map(|_| match rng.gen_range(0..3) {
            0 => 0.0,
            1 => c,
            _ => rng.gen::<f64>(),
        })
        .collect();
    TypeProfile::new(values).expect("sampled values lie in [0, 1]")
}

/// Latest 16 stored, 16 sampled without replacement from the earlier ones,
/// 16 random, then the `n+1` bound profiles.
pub fn build_batch(store: &WcpStore, n: usize, rng: &mut impl Rng) -> Result<Vec<TypeProfile>> {
    let mut batch: Vec<TypeProfile> = store.latest(GROUP).to_vec();
    let earlier = store.earlier(GROUP);
    let take = GROUP.min(earlier.len());
    for i in sample(rng, earlier.len(), take).into_iter() {
        batch.push(earlier[i].clone());
    }
    for _ in 0..GROUP {
        batch.push(sample_random_profile(n, rng));
    }
    batch.extend(bound_profiles(n)?);
    Ok(batch)
}

fn check_batch(net: &Mlp, n: usize, batch: &[TypeProfile]) -> Result<()> {
    if batch.is_empty() {
        return Err(contract("batch must be nonempty"));
    }
    if n < 2 || net.input_dim() != n - 1 {
        return Err(contract(format!("network input_dim {} does not match n = {n}", net.input_dim())));
    }
    if let Some(p) = batch.iter().find(|p| p.len() != n) {
        return Err(contract(format!("profile of length {} in a batch for n = {n}", p.len())));
    }
    Ok(())
}

/// Mean of left + right violation at `alpha_goal` (no shift).
pub fn batch_loss(net: &Mlp, batch: &[TypeProfile], alpha_goal: f64, n: usize) -> Result<f64> {
    check_batch(net, n, batch)?;
    let total: f64 = batch
        .iter()
        .map(|p| {
            let sum_h: f64 = (0..n).map(|i| net.eval(&p.without(i))).sum();
            let (l, r) = margins(n, sum_h, s_value(p), alpha_goal);
            l.max(0.0) + r.max(0.0)
        })
        .sum();
    Ok(total / batch.len() as f64)
}

/// [`batch_loss`] and its subgradient with respect to the parameters.
pub fn batch_loss_and_gradients(
    net: &Mlp,
    batch: &[TypeProfile],
    alpha_goal: f64,
    n: usize,
) -> Result<(f64, Gradients)> {
    check_batch(net, n, batch)?;
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut points = Vec::with_capacity(batch.len() * n);
    for p in batch {
        let inputs: Vec<Vec<f64>> = (0..n).map(|i| p.without(i)).collect();
        let sum_h: f64 = inputs.iter().map(|x| net.eval(x)).sum();
        let (l, r) = margins(n, sum_h, s_value(p), alpha_goal);
        loss += l.max(0.0) + r.max(0.0);
        // d/dh of max(0, (n-1)s - Σh) + max(0, Σh - (n-α)s)
        let mut up = 0.0;
        if l > GRADIENT_FLOOR {
            up -= 1.0;
        }
        if r > GRADIENT_FLOOR {
            up += 1.0;
        }
        if up != 0.0 {
            points.extend(inputs.into_iter().map(|x| (x, up * scale)));
        }
    }
    let grads = if points.is_empty() { Gradients::zeros_like(net) } else { net.gradients(&points)? };
    Ok((loss * scale, grads))
}

/// Runs `epochs` Adam steps on a fixed batch; returns the mean pre-step loss.
pub fn train_round(
    net: &mut Mlp,
    adam: &mut AdamState,
    batch: &[TypeProfile],
    alpha_goal: f64,
    n: usize,
    epochs: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..epochs {
        let (loss, grads) = batch_loss_and_gradients(net, batch, alpha_goal, n)?;
        if !loss.is_finite() {
            return Err(Error::Numerical { layer: net.hidden_count() });
        }
        total += loss;
        adam.adam_step(net, &grads)?;
    }
    Ok(total / epochs.max(1) as f64)
}

/// One certifier call and what followed from it.
#[derive(Debug, Clone, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub alpha_goal: f64,
    pub mean_loss: f64,
    pub eps_left: f64,
    pub eps_right: f64,
    /// `alpha_goal - eps_left - eps_right`; only meaningful when `exact`.
    pub achieved_ratio: f64,
    /// Gate arrivals before this MIP call.
    pub stall_count: usize,
    pub success: bool,
    pub exact: bool,
    pub theta_left: TypeProfile,
    pub theta_right: TypeProfile,
}

#[derive(Debug, Clone, Serialize)]
struct CsvRow<'a> {
    round: usize,
    alpha_goal: f64,
    mean_loss: f64,
    eps_left: f64,
    eps_right: f64,
    achieved_ratio: f64,
    stall_count: usize,
    success: bool,
    exact: bool,
    theta_left: &'a str,
    theta_right: &'a str,
}

/// Writes the history as CSV with the columns of [`RoundRecord`]; profiles
/// are written in their comma-separated text form.
pub fn write_history_csv<W: std::io::Write>(history: &[RoundRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in history {
        let (tl, tr) = (r.theta_left.to_string(), r.theta_right.to_string());
        w.serialize(CsvRow {
            round: r.round,
            alpha_goal: r.alpha_goal,
            mean_loss: r.mean_loss,
            eps_left: r.eps_left,
            eps_right: r.eps_right,
            achieved_ratio: r.achieved_ratio,
            stall_count: r.stall_count,
            success: r.success,
            exact: r.exact,
            theta_left: &tl,
            theta_right: &tr,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct WctOutcome {
    /// Network as it stands after the last round.
    pub net: Mlp,
    /// Best shifted mechanism among exact rounds.
    pub best: Option<Mechanism>,
    /// Its guaranteed ratio; `-inf` when no round was exact.
    pub best_ratio: f64,
    pub best_certificate: Option<Certificate>,
    pub store: WcpStore,
    pub goal: GoalState,
    pub history: Vec<RoundRecord>,
}

pub fn wct_run(net: Mlp, n: usize, config: &TrainConfig, store: WcpStore, goal: GoalState) -> Result<WctOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    wct_run_with(net, n, config, store, goal, &mut rng, |_, _| {})
}

/// [`wct_run`] with a caller-owned rng and a per-round callback.
pub fn wct_run_with(
    mut net: Mlp,
    n: usize,
    config: &TrainConfig,
    mut store: WcpStore,
    mut goal: GoalState,
    rng: &mut ChaCha8Rng,
    mut on_round: impl FnMut(&RoundRecord, Option<&Mechanism>),
) -> Result<WctOutcome> {
    if n < 2 || net.input_dim() != n - 1 {
        return Err(contract(format!("network input_dim {} does not match n = {n}", net.input_dim())));
    }
    let mut adam = AdamState::new(&net, config.learning_rate);
    let mut best: Option<(f64, Mechanism, Certificate)> = None;
    let mut history = Vec::new();
    for round in 1..=config.mip_rounds {
        let mut k = 0usize;
        let mean_loss = loop {
            let batch = build_batch(&store, n, rng)?;
            let mean = train_round(&mut net, &mut adam, &batch, goal.alpha_goal, n, config.epochs_per_round)?;
            k += 1;
            if mean <= config.threshold(k) {
                break mean;
            }
        };
        let cert = certify_with(&net, n, goal.alpha_goal, config.certify)?;
        store.push(cert.theta_left.clone());
        store.push(cert.theta_right.clone());
        let success = cert.exact && cert.gap() <= config.success_tol;
        let ratio = cert.achieved_ratio();
        let improved = cert.exact && best.as_ref().map_or(true, |(r, _, _)| ratio > *r);
        if improved {
            let mech = shift_to_feasible(net.clone(), cert.eps_left, n)?;
            best = Some((ratio, mech, cert.clone()));
        }
        let record = RoundRecord {
            round,
            alpha_goal: goal.alpha_goal,
            mean_loss,
            eps_left: cert.eps_left,
            eps_right: cert.eps_right,
            achieved_ratio: ratio,
            stall_count: k,
            success,
            exact: cert.exact,
            theta_left: cert.theta_left,
            theta_right: cert.theta_right,
        };
        log::info!(
            "mip round {round}: goal {:.6} eps {:.3e}+{:.3e} ratio {:.6} after {k} training rounds",
            record.alpha_goal,
            record.eps_left,
            record.eps_right,
            ratio
        );
        on_round(&record, best.as_ref().filter(|_| improved).map(|(_, m, _)| m));
        history.push(record);
        goal = goal_update(goal, success);
    }
    let (best_ratio, best, best_certificate) = match best {
        Some((r, m, c)) => (r, Some(m), Some(c)),
        None => (f64::NEG_INFINITY, None, None),
    };
    Ok(WctOutcome { net, best, best_ratio, best_certificate, store, goal, history })
}

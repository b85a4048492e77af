//! Lottery training: shrink a large network by repeatedly pruning its least
//! important hidden node, then scratch the resulting ticket with worst-case
//! training. Profiles found while scratching are shared with later draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{manual_lower_bound, theoretical_upper_bound};
use crate::certifier::Certificate;
use crate::error::{contract, Result};
use crate::mechanism::Mechanism;
use crate::net::{AdamState, Dense, Mlp};
use crate::trainer::{build_batch, goal_update, train_round, wct_run_with, GoalState, TrainConfig, WcpStore, GROUP};

/// Relative importance of one hidden node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Importance {
    pub absolute: f64,
    pub relative: f64,
    /// Set when every node of the layer has zero outgoing weight.
    pub uniform: bool,
}

fn outgoing_abs(net: &Mlp, layer: usize, node: usize) -> f64 {
    let next = &net.layers()[layer + 1];
    (0..next.outputs()).map(|r| next.weight(r, node).abs()).sum()
}

pub fn node_relative_importance(net: &Mlp, layer: usize, node: usize) -> Result<Importance> {
    let sizes = net.hidden_sizes();
    if layer >= sizes.len() || node >= sizes[layer] {
        return Err(contract(format!("no hidden node ({layer}, {node})")));
    }
    let absolute = outgoing_abs(net, layer, node);
    let total: f64 = (0..sizes[layer]).map(|j| outgoing_abs(net, layer, j)).sum();
    if total == 0.0 {
        return Ok(Importance { absolute, relative: 1.0 / sizes[layer] as f64, uniform: true });
    }
    Ok(Importance { absolute, relative: absolute / total, uniform: false })
}

/// Position `(layer, node)` of the globally least important hidden node.
/// Layers down to a single node are skipped.
pub fn least_important_node(net: &Mlp) -> Result<(usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for (layer, &size) in net.hidden_sizes().iter().enumerate() {
        if size < 2 {
            continue;
        }
        for node in 0..size {
            let r = node_relative_importance(net, layer, node)?.relative;
            if best.map_or(true, |(b, _, _)| r < b) {
                best = Some((r, layer, node));
            }
        }
    }
    best.map(|(_, l, j)| (l, j))
        .ok_or_else(|| contract("every hidden layer is down to one node"))
}

pub fn prune_one_node(net: &Mlp) -> Result<Mlp> {
    let (layer, node) = least_important_node(net)?;
    let mut out = net.clone();
    out.remove_hidden_node(layer, node)?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Ticket {
    pub draw: usize,
    /// Retained original node indices, one ascending list per hidden layer.
    pub retained: Vec<Vec<usize>>,
    /// The large net's initial values restricted to `retained`.
    pub init_net: Mlp,
    /// The subnetwork as it stood when pruning finished.
    pub trained_net: Mlp,
    pub best: Option<Mechanism>,
    pub best_ratio: f64,
    pub certificate: Option<Certificate>,
    pub novel: bool,
    /// Whether a scratch round succeeded at the outer goal or higher.
    pub success: bool,
}

impl Ticket {
    pub fn size(&self) -> usize {
        self.retained.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone)]
pub struct DrawHistory {
    pub tickets: Vec<Ticket>,
    /// Profiles shared across draws.
    pub store: WcpStore,
    initial: Mlp,
    pub goal: GoalState,
    pub rng: ChaCha8Rng,
}

impl DrawHistory {
    pub fn new(initial: Mlp, goal: GoalState, store: WcpStore, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Self { tickets: Vec::new(), store, initial, goal, rng }
    }

    pub fn initial(&self) -> &Mlp {
        &self.initial
    }

    /// Tickets sorted by certified ratio, best first.
    pub fn ranked(&self) -> Vec<&Ticket> {
        let mut ts: Vec<&Ticket> = self.tickets.iter().filter(|t| t.best.is_some()).collect();
        ts.sort_by(|a, b| b.best_ratio.total_cmp(&a.best_ratio).then(a.draw.cmp(&b.draw)));
        ts
    }
}

pub fn is_new_ticket(ticket: &Ticket, history: &DrawHistory) -> bool {
    history.tickets.iter().all(|t| t.retained != ticket.retained)
}

/// Trains from the restored initial network, pruning one node each time a
/// round's mean loss drops under the schedule threshold, until `target_size`
/// hidden nodes remain and the loss gate passes once more.
pub fn draw_ticket(history: &mut DrawHistory, n: usize, target_size: usize, config: &TrainConfig) -> Result<Ticket> {
    let total = history.initial.hidden_count();
    if target_size < history.initial.hidden_sizes().len() || target_size >= total {
        return Err(contract(format!(
            "ticket size {target_size} must be below {total} and at least one per layer"
        )));
    }
    if n < 2 || history.initial.input_dim() != n - 1 {
        return Err(contract(format!("network input_dim {} does not match n = {n}", history.initial.input_dim())));
    }
    let mut net = history.initial.clone();
    let mut retained: Vec<Vec<usize>> = net.hidden_sizes().iter().map(|&s| (0..s).collect()).collect();
    let mut adam = AdamState::new(&net, config.learning_rate);
    let alpha = history.goal.alpha_goal;
    let mut k = 0usize;
    loop {
        let batch = build_batch(&history.store, n, &mut history.rng)?;
        let mean = train_round(&mut net, &mut adam, &batch, alpha, n, config.epochs_per_round)?;
        k += 1;
        if mean > config.threshold(k) {
            continue;
        }
        if net.hidden_count() <= target_size {
            break;
        }
        let (layer, node) = least_important_node(&net)?;
        net.remove_hidden_node(layer, node)?;
        let original = retained[layer].remove(node);
        log::debug!("pruned node {original} of layer {layer} after {k} rounds, loss {mean:.3e}");
        // moment estimates no longer line up with the parameters
        adam = AdamState::new(&net, config.learning_rate);
        k = 0;
    }
    let init_net = history.initial.restrict(&retained)?;
    let mut ticket = Ticket {
        draw: history.tickets.len() + 1,
        retained,
        init_net,
        trained_net: net,
        best: None,
        best_ratio: f64::NEG_INFINITY,
        certificate: None,
        novel: false,
        success: false,
    };
    ticket.novel = is_new_ticket(&ticket, history);
    Ok(ticket)
}

/// Runs worst-case training on the ticket with its own store, then shares the
/// last 16 profiles it found and moves the outer goal.
pub fn scratch_ticket(ticket: &mut Ticket, n: usize, config: &TrainConfig, history: &mut DrawHistory) -> Result<()> {
    let outer = history.goal;
    let outcome = wct_run_with(
        ticket.trained_net.clone(),
        n,
        config,
        WcpStore::new(),
        outer,
        &mut history.rng,
        |_, _| {},
    )?;
    history.store.extend(outcome.store.latest(GROUP).iter().cloned());
    ticket.success = outcome
        .history
        .iter()
        .any(|r| r.success && r.alpha_goal >= outer.alpha_goal);
    ticket.best = outcome.best;
    ticket.best_ratio = outcome.best_ratio;
    ticket.certificate = outcome.best_certificate;
    if config.mip_rounds > 0 {
        history.goal = goal_update(outer, ticket.success);
    }
    Ok(())
}

/// Per-draw summary row.
#[derive(Debug, Clone, Serialize)]
pub struct DrawRecord {
    pub draw: usize,
    pub novel: bool,
    pub best_ratio: f64,
    /// Upper bound minus this ticket's ratio.
    pub gap: f64,
    pub improved: bool,
    /// Best ratio over all draws so far.
    pub running_best: f64,
}

pub fn write_draws_csv<W: std::io::Write>(records: &[DrawRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["draw", "novelty", "best_ratio", "gap"])?;
    for r in records {
        w.write_record([
            r.draw.to_string(),
            u8::from(r.novel).to_string(),
            r.best_ratio.to_string(),
            r.gap.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LotteryConfig {
    /// Used for drawing and, with `scratch_rounds` MIP rounds, for scratching.
    pub train: TrainConfig,
    pub scratch_rounds: usize,
    pub seed: u64,
}

impl Default for LotteryConfig {
    fn default() -> Self {
        Self { train: TrainConfig::default(), scratch_rounds: 100, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct LotteryOutcome {
    pub best: Option<Mechanism>,
    pub best_ratio: f64,
    pub history: DrawHistory,
    pub records: Vec<DrawRecord>,
}

/// Draws and scratches `draws` tickets from one large network. `store` seeds
/// the shared profile store (empty for a fresh start).
pub fn lottery_run(
    n: usize,
    large_sizes: &[usize],
    target_size: usize,
    draws: usize,
    config: &LotteryConfig,
    store: WcpStore,
) -> Result<LotteryOutcome> {
    if draws == 0 {
        return Err(contract("at least one draw required"));
    }
    if n < 3 {
        return Err(contract(format!("lottery needs n >= 3, got {n}")));
    }
    let initial = Mlp::init_random(n - 1, large_sizes, config.seed)?;
    let goal = GoalState::new(manual_lower_bound(n)?, theoretical_upper_bound(n)?)?;
    let mut history = DrawHistory::new(initial, goal, store, config.seed);
    let scratch = TrainConfig { mip_rounds: config.scratch_rounds, ..config.train };
    let upper = goal.alpha_upper;
    let mut records = Vec::with_capacity(draws);
    let mut running = f64::NEG_INFINITY;
    for _ in 0..draws {
        let mut ticket = draw_ticket(&mut history, n, target_size, &config.train)?;
        scratch_ticket(&mut ticket, n, &scratch, &mut history)?;
        let improved = ticket.best_ratio > running;
        running = running.max(ticket.best_ratio);
        let record = DrawRecord {
            draw: ticket.draw,
            novel: ticket.novel,
            best_ratio: ticket.best_ratio,
            gap: upper - ticket.best_ratio,
            improved,
            running_best: running,
        };
        log::info!(
            "draw {}: nodes {:?} novel {} ratio {:.6} best {:.6}",
            record.draw,
            ticket.retained,
            record.novel,
            record.best_ratio,
            running
        );
        records.push(record);
        history.tickets.push(ticket);
    }
    let best_ticket = history.ranked().first().map(|t| (t.best.clone(), t.best_ratio));
    let (best, best_ratio) = best_ticket.unwrap_or((None, f64::NEG_INFINITY));
    Ok(LotteryOutcome { best, best_ratio, history, records })
}

fn identity_layer(width: usize) -> Dense {
    let mut w = vec![0.0; width * width];
    for i in 0..width {
        w[i * width + i] = 1.0;
    }
    Dense::new(width, width, w, vec![0.0; width]).expect("square identity")
}

/// Hidden layers of `net` extended to `depth` with identity layers. ReLU
/// outputs are nonnegative, so the extra layers pass them through unchanged.
fn padded_hidden(net: &Mlp, depth: usize) -> Vec<Dense> {
    let mut layers = net.hidden_layers().to_vec();
    let width = layers.last().map_or(net.input_dim(), Dense::outputs);
    while layers.len() < depth {
        layers.push(identity_layer(width));
    }
    layers
}

fn block_diag(a: &Dense, b: &Dense, shared_input: bool) -> Result<Dense> {
    let inputs = if shared_input { a.inputs() } else { a.inputs() + b.inputs() };
    let mut rows = Vec::with_capacity(a.outputs() + b.outputs());
    for r in 0..a.outputs() {
        let mut row = vec![0.0; inputs];
        row[..a.inputs()].copy_from_slice(a.row(r));
        rows.push(row);
    }
    let offset = if shared_input { 0 } else { a.inputs() };
    for r in 0..b.outputs() {
        let mut row = vec![0.0; inputs];
        row[offset..offset + b.inputs()].copy_from_slice(b.row(r));
        rows.push(row);
    }
    let biases = a.biases().iter().chain(b.biases()).copied().collect();
    Dense::from_rows(rows, biases)
}

/// The mechanism that runs `m1` or `m2` with probability 1/2 each, as one net
/// computing `(h1 + h2) / 2`.
pub fn ensemble(m1: &Mechanism, m2: &Mechanism) -> Result<Mechanism> {
    if m1.n() != m2.n() {
        return Err(contract(format!("ensemble members have n = {} and {}", m1.n(), m2.n())));
    }
    let (a, b) = (m1.net(), m2.net());
    let depth = a.hidden_layers().len().max(b.hidden_layers().len());
    let mut layers = Vec::with_capacity(depth + 1);
    if depth > 0 {
        let (ha, hb) = (padded_hidden(a, depth), padded_hidden(b, depth));
        for (i, (la, lb)) in ha.iter().zip(&hb).enumerate() {
            layers.push(block_diag(la, lb, i == 0)?);
        }
    }
    let (oa, ob) = (a.output_layer(), b.output_layer());
    let mut out: Vec<f64> = oa.row(0).iter().map(|w| 0.5 * w).collect();
    out.extend(ob.row(0).iter().map(|w| 0.5 * w));
    layers.push(Dense::from_rows(vec![out], vec![0.5 * (oa.bias(0) + ob.bias(0))])?);
    let skip = match (a.skip(), b.skip()) {
        (None, None) => None,
        (sa, sb) => {
            let d = a.input_dim();
            let get = |s: Option<&[f64]>, i: usize| s.map_or(0.0, |s| s[i]);
            Some((0..d).map(|i| 0.5 * (get(sa, i) + get(sb, i))).collect())
        }
    };
    let net = Mlp::new(a.input_dim(), layers, skip)?;
    Mechanism::new(m1.n(), net, 0.5 * (m1.shift() + m2.shift()))
}

/// Ensemble of the two best scratched tickets, if there are two.
pub fn ensemble_best(history: &DrawHistory) -> Result<Option<Mechanism>> {
    let ranked = history.ranked();
    match (ranked.first(), ranked.get(1)) {
        (Some(a), Some(b)) => {
            let (ma, mb) = (a.best.as_ref(), b.best.as_ref());
            Ok(Some(ensemble(ma.expect("ranked"), mb.expect("ranked"))?))
        }
        _ => Ok(None),
    }
}

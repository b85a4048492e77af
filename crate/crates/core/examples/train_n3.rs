//! Worst-case training for 3 agents from a random [10] network.
//!
//! cargo run --release --example train_n3 -- [seed] [mip_rounds]

use redistrib::bounds::{manual_lower_bound, theoretical_upper_bound};
use redistrib::trainer::{wct_run, GoalState, TrainConfig, WcpStore};
use redistrib::Mlp;

fn main() -> redistrib::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let seed = args.first().copied().unwrap_or(1);
    let rounds = args.get(1).copied().unwrap_or(30) as usize;

    let n = 3;
    let net = Mlp::init_random(n - 1, &[10], seed)?;
    let goal = GoalState::new(manual_lower_bound(n)?, theoretical_upper_bound(n)?)?;
    let config = TrainConfig { mip_rounds: rounds, seed, ..Default::default() };
    let out = wct_run(net, n, &config, WcpStore::new(), goal)?;

    for r in &out.history {
        println!(
            "round {:>3}  loss {:.2e}  eps {:.3e} + {:.3e}  ratio {:+.5}",
            r.round, r.mean_loss, r.eps_left, r.eps_right, r.achieved_ratio
        );
    }
    println!("best ratio {:.6}, gap {:.4}", out.best_ratio, goal.alpha_upper - out.best_ratio);
    if let Some(best) = out.best {
        println!("{}", best.to_text());
    }
    Ok(())
}

//! Draws a few tickets from a [10] network for 3 agents and ensembles the best two.
//!
//! cargo run --release --example lottery -- [draws] [ticket_size]

use redistrib::certifier::CertifyOptions;
use redistrib::lottery::{ensemble_best, lottery_run, write_draws_csv, LotteryConfig};
use redistrib::trainer::{TrainConfig, WcpStore};
use redistrib::certify_mechanism;

fn main() -> redistrib::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let draws = args.first().copied().unwrap_or(3);
    let size = args.get(1).copied().unwrap_or(4);

    let config = LotteryConfig {
        train: TrainConfig { learning_rate: 1e-3, epochs_per_round: 100, ..Default::default() },
        scratch_rounds: 10,
        seed: 0,
    };
    let out = lottery_run(3, &[10], size, draws, &config, WcpStore::new())?;
    write_draws_csv(&out.records, std::io::stdout())?;
    for t in &out.history.tickets {
        println!("draw {} kept {:?}", t.draw, t.retained);
    }
    println!("best ratio {:.6}, shared store {} profiles", out.best_ratio, out.history.store.len());

    if let Some(e) = ensemble_best(&out.history)? {
        let cert = certify_mechanism(&e, out.best_ratio, CertifyOptions::default())?;
        println!("ensemble of the best two at the best single ratio: gap {:.3e}", cert.gap());
    }
    Ok(())
}

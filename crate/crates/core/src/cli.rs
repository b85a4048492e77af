//! Command-line entry point. Exit codes: 0 success, 1 usage/contract/parse
//! errors, 2 when a certifier ran out of branch-and-bound nodes.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::bounds::{bounds, manual_lower_bound, theoretical_upper_bound};
use crate::certifier::{certify_mechanism, grid_oracle, Certificate, CertifyOptions, DEFAULT_NODE_BUDGET};
use crate::error::{Error, Result};
use crate::fixtures::known_mechanisms;
use crate::lottery::{ensemble, ensemble_best, lottery_run, write_draws_csv, LotteryConfig};
use crate::mechanism::{payments, total_utility, Mechanism, TypeProfile};
use crate::net::Mlp;
use crate::trainer::{wct_run_with, write_history_csv, GoalState, TrainConfig, WcpStore};

#[derive(Debug, Parser)]
#[command(name = "redistrib", version, about = "Worst-case VCG redistribution mechanisms as ReLU networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct SolverArgs {
    /// Run the two MIPs on separate threads when 2 or more.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Branch-and-bound node limit per MIP.
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    budget: usize,
}

impl SolverArgs {
    fn options(&self) -> CertifyOptions {
        CertifyOptions { node_budget: self.budget, threads: self.threads }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StoreMode {
    /// Resume from the store file in the output directory if there is one.
    Persistent,
    Fresh,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Worst-case violations of a mechanism file.
    Certify {
        #[arg(long)]
        mech: PathBuf,
        /// Ratio goal; defaults to the upper bound for the mechanism's n.
        #[arg(long)]
        alpha: Option<f64>,
        /// Also scan a sorted grid with this many points per axis.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Worst-case training from a random network.
    Train {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "10")]
        hidden: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        mip_rounds: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        /// Adam steps per training round.
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        /// Starting ratio; defaults to the best manual ratio (n+1)/(2n).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Lottery training: draw tickets by pruning a large network, then scratch them.
    Lottery {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "20,20")]
        large: Vec<usize>,
        #[arg(long)]
        ticket_size: usize,
        #[arg(long, default_value_t = 1)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// MIP rounds per scratch.
        #[arg(long, default_value_t = 100)]
        mip_rounds: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        /// Adam steps per training round.
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, value_enum, default_value = "persistent")]
        store: StoreMode,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Certify the half-half mixture of two mechanisms.
    Ensemble {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Manual lower bound and upper bound on the worst-case ratio.
    Bounds {
        #[arg(long)]
        n: usize,
    },
    /// Certify every built-in mechanism for n at the upper bound.
    VerifyKnown {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Build decision and payments of a mechanism on one profile.
    Demo {
        #[arg(long)]
        mech: PathBuf,
        #[arg(long)]
        profile: String,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Certify { .. } => "certify",
            Command::Train { .. } => "train",
            Command::Lottery { .. } => "lottery",
            Command::Ensemble { .. } => "ensemble",
            Command::Bounds { .. } => "bounds",
            Command::VerifyKnown { .. } => "verify-known",
            Command::Demo { .. } => "demo",
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::Train { seed, .. } | Command::Lottery { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    fn out(&self) -> Option<&Path> {
        match self {
            Command::Certify { out, .. }
            | Command::Train { out, .. }
            | Command::Lottery { out, .. }
            | Command::Ensemble { out, .. } => out.as_deref(),
            _ => None,
        }
    }
}

#[derive(Debug, Serialize)]
struct RunManifest {
    subcommand: String,
    args: Vec<String>,
    seed: Option<u64>,
    version: String,
    started: f64,
    finished: Option<f64>,
    exit_code: Option<i32>,
    outputs: Vec<String>,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::from)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Writes one line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn say(text: &str) -> Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    say(&serde_json::to_string_pretty(value).map_err(std::io::Error::from)?)
}

/// What a subcommand produced.
struct Report {
    exhausted: bool,
    outputs: Vec<String>,
}

impl Report {
    fn done() -> Self {
        Self { exhausted: false, outputs: Vec::new() }
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let mut manifest = RunManifest {
        subcommand: cli.command.name().to_string(),
        args: args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
        seed: cli.command.seed(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started: now(),
        finished: None,
        exit_code: None,
        outputs: Vec::new(),
    };
    let manifest_path = cli.command.out().map(|d| d.join("manifest.json"));
    if let Some(path) = &manifest_path {
        let written = fs::create_dir_all(path.parent().expect("joined path")).map_err(Error::from)
            .and_then(|_| write_json(path, &manifest));
        if let Err(e) = written {
            eprintln!("error: {e}");
            return 1;
        }
    }
    let (code, outputs) = match dispatch(&cli.command) {
        Ok(report) => (if report.exhausted { 2 } else { 0 }, report.outputs),
        Err(e) => {
            eprintln!("error: {e}");
            (1, Vec::new())
        }
    };
    if code == 2 {
        eprintln!("warning: node budget exhausted; reported violations are lower bounds");
    }
    if let Some(path) = &manifest_path {
        manifest.finished = Some(now());
        manifest.exit_code = Some(code);
        manifest.outputs = outputs;
        if let Err(e) = write_json(path, &manifest) {
            eprintln!("error: {e}");
            return 1;
        }
    }
    code
}

fn default_alpha(n: usize, alpha: Option<f64>) -> Result<f64> {
    match alpha {
        Some(a) => Ok(a),
        None => theoretical_upper_bound(n),
    }
}

fn certificate_json(cert: &Certificate) -> serde_json::Value {
    json!({
        "certificate": cert,
        "gap": cert.gap(),
        "achieved_ratio": cert.achieved_ratio(),
    })
}

fn emit(out: Option<&Path>, file: &str, value: &impl Serialize, report: &mut Report) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(file);
            write_json(&path, value)?;
            report.outputs.push(path.display().to_string());
            Ok(())
        }
        None => print_json(value),
    }
}

fn dispatch(command: &Command) -> Result<Report> {
    let mut report = Report::done();
    match command {
        Command::Certify { mech, alpha, grid, out, solver } => {
            let m = Mechanism::load(mech)?;
            let alpha = default_alpha(m.n(), *alpha)?;
            let cert = certify_mechanism(&m, alpha, solver.options())?;
            report.exhausted = !cert.exact;
            let mut value = certificate_json(&cert);
            if let Some(resolution) = grid {
                let mut net = m.net().clone();
                net.offset_output(m.shift());
                value["grid"] = json!(grid_oracle(&net, m.n(), alpha, *resolution)?);
            }
            emit(out.as_deref(), "certificate.json", &value, &mut report)?;
        }
        Command::Train { n, hidden, seed, mip_rounds, lr, epochs, alpha, out, solver } => {
            let config = TrainConfig {
                learning_rate: *lr,
                epochs_per_round: *epochs,
                mip_rounds: *mip_rounds,
                seed: *seed,
                certify: solver.options(),
                ..Default::default()
            };
            train(*n, hidden, &config, *alpha, out.as_deref(), &mut report)?;
        }
        Command::Lottery { n, large, ticket_size, draws, seed, mip_rounds, lr, epochs, store, out, solver } => {
            let config = LotteryConfig {
                train: TrainConfig {
                    learning_rate: *lr,
                    epochs_per_round: *epochs,
                    seed: *seed,
                    certify: solver.options(),
                    ..Default::default()
                },
                scratch_rounds: *mip_rounds,
                seed: *seed,
            };
            let store_path = out.as_ref().map(|d| d.join("store.txt"));
            let initial = match (store, &store_path) {
                (StoreMode::Persistent, Some(p)) if p.exists() => WcpStore::load(p)?,
                _ => WcpStore::new(),
            };
            let result = lottery_run(*n, large, *ticket_size, *draws, &config, initial)?;
            let summary = json!({
                "best_ratio": result.best_ratio,
                "gap": result.history.goal.alpha_upper - result.best_ratio,
                "novel_fraction": result.records.iter().filter(|r| r.novel).count() as f64 / *draws as f64,
                "improved_fraction": result.records.iter().filter(|r| r.improved).count() as f64 / *draws as f64,
                "draws": result.records,
            });
            if let Some(dir) = out {
                fs::create_dir_all(dir)?;
                let csv_path = dir.join("draws.csv");
                write_draws_csv(&result.records, fs::File::create(&csv_path)?)?;
                report.outputs.push(csv_path.display().to_string());
                let store_path = store_path.expect("out is set");
                result.history.store.save(&store_path)?;
                report.outputs.push(store_path.display().to_string());
                for t in &result.history.tickets {
                    if let Some(m) = &t.best {
                        let path = dir.join(format!("ticket-{:03}.json", t.draw));
                        m.save(&path)?;
                        report.outputs.push(path.display().to_string());
                    }
                }
                if let Some(best) = &result.best {
                    let path = dir.join("best.json");
                    best.save(&path)?;
                    report.outputs.push(path.display().to_string());
                }
                if let Some(e) = ensemble_best(&result.history)? {
                    let path = dir.join("ensemble.json");
                    e.save(&path)?;
                    report.outputs.push(path.display().to_string());
                }
            }
            emit(out.as_deref(), "summary.json", &summary, &mut report)?;
        }
        Command::Ensemble { a, b, alpha, out, solver } => {
            let (ma, mb) = (Mechanism::load(a)?, Mechanism::load(b)?);
            let e = ensemble(&ma, &mb)?;
            let alpha = default_alpha(e.n(), *alpha)?;
            let cert = certify_mechanism(&e, alpha, solver.options())?;
            report.exhausted = !cert.exact;
            if let Some(dir) = out {
                fs::create_dir_all(dir)?;
                let path = dir.join("ensemble.json");
                e.save(&path)?;
                report.outputs.push(path.display().to_string());
            }
            emit(out.as_deref(), "certificate.json", &certificate_json(&cert), &mut report)?;
        }
        Command::Bounds { n } => print_json(&bounds(*n)?)?,
        Command::VerifyKnown { n, solver } => {
            let alpha = theoretical_upper_bound(*n)?;
            say(&format!("{:<14} {:>14} {:>14} {:>14} {:>8}", "name", "eps_left", "eps_right", "gap", "nodes"))?;
            for k in known_mechanisms(*n)? {
                let cert = certify_mechanism(&k.mechanism, alpha, solver.options())?;
                report.exhausted |= !cert.exact;
                say(&format!(
                    "{:<14} {:>14.6e} {:>14.6e} {:>14.6e} {:>8}",
                    k.name,
                    cert.eps_left,
                    cert.eps_right,
                    cert.gap(),
                    cert.left_nodes + cert.right_nodes
                ))?;
            }
        }
        Command::Demo { mech, profile } => {
            let m = Mechanism::load(mech)?;
            let p: TypeProfile = profile.parse()?;
            let pay = payments(&m, &p)?;
            print_json(&json!({
                "profile": p,
                "build": pay.build,
                "payments": pay.received,
                "total_received": pay.total_received(),
                "total_utility": total_utility(&m, &p)?,
            }))?;
        }
    }
    Ok(report)
}

fn train(
    n: usize,
    hidden: &[usize],
    config: &TrainConfig,
    alpha: Option<f64>,
    out: Option<&Path>,
    report: &mut Report,
) -> Result<()> {
    use rand::SeedableRng;

    let seed = config.seed;
    let low = match alpha {
        Some(a) => a,
        None => manual_lower_bound(n)?,
    };
    let goal = GoalState::new(low, theoretical_upper_bound(n)?)?;
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 agents, got {n}")));
    }
    let net = Mlp::init_random(n - 1, hidden, seed)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut saved: Vec<String> = Vec::new();
    let mut failure: Option<Error> = None;
    let outcome = wct_run_with(net, n, config, WcpStore::new(), goal, &mut rng, |record, improved| {
        if let (Some(dir), Some(m)) = (out, improved) {
            let path = dir.join(format!("mech-round-{:03}.json", record.round));
            match m.save(&path) {
                Ok(()) => saved.push(path.display().to_string()),
                Err(e) => failure = failure.take().or(Some(e)),
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    report.outputs.extend(saved);
    report.exhausted = outcome.history.iter().any(|r| !r.exact);
    let summary = json!({
        "best_ratio": outcome.best_ratio,
        "gap": goal.alpha_upper - outcome.best_ratio,
        "goal": outcome.goal,
        "rounds": outcome.history.len(),
    });
    if let Some(dir) = out {
        let history = dir.join("history.csv");
        write_history_csv(&outcome.history, fs::File::create(&history)?)?;
        let store = dir.join("store.txt");
        outcome.store.save(&store)?;
        report.outputs.push(history.display().to_string());
        report.outputs.push(store.display().to_string());
        if let Some(best) = &outcome.best {
            let path = dir.join("best.json");
            best.save(&path)?;
            report.outputs.push(path.display().to_string());
        }
    }
    emit(out, "summary.json", &summary, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(run(["redistrib", "no-such-command"]), 1);
        assert_eq!(run(["redistrib", "bounds", "--n", "4", "--bogus"]), 1);
        assert_eq!(run(["redistrib", "bounds", "--n", "2"]), 1);
        assert_eq!(run(["redistrib", "--help"]), 0);
    }

    #[test]
    fn bounds_and_verify_known() {
        assert_eq!(run(["redistrib", "bounds", "--n", "4"]), 0);
        assert_eq!(run(["redistrib", "verify-known", "--n", "3"]), 0);
    }

    #[test]
    fn demo_and_certify_files() {
        let dir = tempfile::tempdir().unwrap();
        let mech = dir.path().join("m.json");
        crate::fixtures::closed_form_n3().save(&mech).unwrap();
        let m = mech.to_str().unwrap();
        assert_eq!(run(["redistrib", "demo", "--mech", m, "--profile", "0.2,0.3,0.9"]), 0);
        assert_eq!(run(["redistrib", "demo", "--mech", m, "--profile", "0.2,x"]), 1);
        let out = dir.path().join("cert");
        let o = out.to_str().unwrap();
        assert_eq!(run(["redistrib", "certify", "--mech", m, "--grid", "21", "--out", o]), 0);
        let cert: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
        assert!(cert["gap"].as_f64().unwrap() <= 1e-6);
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["exit_code"], 0);
        assert_eq!(manifest["subcommand"], "certify");
        assert!(manifest["finished"].as_f64().is_some());
        // one node is not enough to close the tree
        assert_eq!(run(["redistrib", "certify", "--mech", m, "--budget", "1"]), 2);
    }
}

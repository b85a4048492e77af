//! Certifies the built-in mechanisms at the upper bound for their n.
//!
//! cargo run --release --example certify_known -- 3 4

use redistrib::bounds::theoretical_upper_bound;
use redistrib::certifier::CertifyOptions;
use redistrib::fixtures::known_mechanisms;
use redistrib::certify_mechanism;

fn main() -> redistrib::Result<()> {
    let ns: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ns = if ns.is_empty() { vec![3, 4] } else { ns };
    for n in ns {
        let alpha = theoretical_upper_bound(n)?;
        println!("n = {n}, alpha = {alpha:.6}");
        for k in known_mechanisms(n)? {
            let t = std::time::Instant::now();
            let cert = certify_mechanism(&k.mechanism, alpha, CertifyOptions { threads: 2, ..Default::default() })?;
            println!(
                "  {:<16} gap {:.3e}  (left {:.3e} at {}, right {:.3e} at {})  {:?}",
                k.name,
                cert.gap(),
                cert.eps_left,
                cert.theta_left,
                cert.eps_right,
                cert.theta_right,
                t.elapsed()
            );
        }
    }
    Ok(())
}

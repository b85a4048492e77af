//! Mixes two optimal 3-agent mechanisms and certifies the result.

use redistrib::certifier::CertifyOptions;
use redistrib::fixtures::known_mechanisms;
use redistrib::lottery::ensemble;
use redistrib::certify_mechanism;

fn main() -> redistrib::Result<()> {
    let list = known_mechanisms(3)?;
    let (a, b) = (&list[1], &list[4]);
    let e = ensemble(&a.mechanism, &b.mechanism)?;
    println!(
        "{} + {}: {} hidden nodes",
        a.name,
        b.name,
        e.net().hidden_count()
    );
    for alpha in [0.6, 2.0 / 3.0, 0.7] {
        let cert = certify_mechanism(&e, alpha, CertifyOptions::default())?;
        println!("alpha {alpha:.4}: eps_left {:.3e}, eps_right {:.3e}", cert.eps_left, cert.eps_right);
    }
    Ok(())
}

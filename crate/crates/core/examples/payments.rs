//! Build decisions and redistribution payments of the closed-form 3-agent mechanism.

use redistrib::fixtures::closed_form_n3;
use redistrib::mechanism::{payments, total_utility};
use redistrib::TypeProfile;

fn main() -> redistrib::Result<()> {
    let mech = closed_form_n3();
    for text in ["0,0,0", "0.2,0.3,0.4", "0.2,0.3,0.9", "0,0.5,0.5", "1,1,1"] {
        let p: TypeProfile = text.parse()?;
        let pay = payments(&mech, &p)?;
        let received: Vec<String> = pay.received.iter().map(|v| format!("{v:+.4}")).collect();
        let best = p.sum().max(1.0);
        let u = total_utility(&mech, &p)?;
        println!(
            "{:<14} build={:<5} payments [{}]  utility {:.4} of {:.4} ({:.3})",
            text,
            pay.build,
            received.join(", "),
            u,
            best,
            u / best
        );
    }
    Ok(())
}

//! Manual lower bound vs. LP upper bound on the worst-case ratio.

use redistrib::bounds::bounds;

fn main() -> redistrib::Result<()> {
    println!("{:>3} {:>10} {:>10}  h values", "n", "manual", "upper");
    for n in 3..=12 {
        let b = bounds(n)?;
        let hs: Vec<String> = b.h_values.iter().map(|h| format!("{h:.4}")).collect();
        println!("{n:>3} {:>10.6} {:>10.6}  [{}]", b.alpha_lower_manual, b.alpha_upper, hs.join(", "));
    }
    Ok(())
}

//! Exact MIP violations of a random network next to a brute-force grid scan.

use redistrib::{certify, grid_oracle, Mlp};

fn main() -> redistrib::Result<()> {
    let net = Mlp::init_random(2, &[6], 42)?;
    let alpha = 0.6;
    let t = std::time::Instant::now();
    let cert = certify(&net, 3, alpha)?;
    println!(
        "mip : left {:+.6} at {}  right {:+.6} at {}  ({} + {} nodes, {:?})",
        cert.left_optimum, cert.theta_left, cert.right_optimum, cert.theta_right, cert.left_nodes, cert.right_nodes,
        t.elapsed()
    );
    for resolution in [11, 51, 201] {
        let t = std::time::Instant::now();
        let g = grid_oracle(&net, 3, alpha, resolution)?;
        println!(
            "grid {resolution:>3}: left {:+.6} at {}  right {:+.6} at {}  ({} points, {:?})",
            g.left, g.theta_left, g.right, g.theta_right, g.points, t.elapsed()
        );
    }
    Ok(())
}

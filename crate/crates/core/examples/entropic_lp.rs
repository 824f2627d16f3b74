//! Entropic LPs: dual Newton on a general polytope, Sinkhorn on a transport
//! polytope, and how both approach the exact LP as `eps` shrinks.
//!
//! ```bash
//! cargo run --example entropic_lp
//! ```

use nalgebra::{DMatrix, DVector};

use entroqp::lp::{kappa, sinkhorn, solve_entropic_lp, solve_lp, EntropicOptions};
use entroqp::polytope::{enumerate_vertices, Polytope};

fn main() -> entroqp::Result<()> {
    let mu = [0.2, 0.3, 0.5];
    let nu = [0.4, 0.4, 0.2];
    let cost = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]);
    let p = Polytope::transport(&mu, &nu)?;
    let c = DVector::from_fn(9, |k, _| cost[(k / 3, k % 3)]);

    let exact = solve_lp(&p, &c)?;
    let gap = kappa(&enumerate_vertices(&p)?, &c);
    println!("LP value {:.6} after {} pivots, kappa = {:.4}", exact.value, exact.pivots, gap.kappa);

    println!("{:>8} {:>14} {:>14} {:>10}", "eps", "newton", "sinkhorn", "residual");
    for eps in [1.0, 0.3, 0.1, 0.03, 0.01] {
        let s = solve_entropic_lp(&p, &c, eps, &EntropicOptions::default())?;
        let t = sinkhorn(&mu, &nu, &cost, eps)?;
        println!("{eps:>8} {:>14.9} {:>14.9} {:>10.1e}", s.value, t.value, s.residual);
    }
    Ok(())
}

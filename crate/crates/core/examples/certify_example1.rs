//! Certifying local minimizers of `g_0` on `min -x^2/2 + x` over `[1, 2]`:
//! `u = 1` is a saddle on a cell boundary, `u = 2` a genuine minimizer.
//!
//! ```bash
//! cargo run --example certify_example1
//! ```

use nalgebra::DVector;

use entroqp::certify::{certify, lambda, while_iteration_bound, zeta};
use entroqp::instances;
use entroqp::qp::clarke_subdiff_g0;

fn main() -> entroqp::Result<()> {
    let qp = instances::example1();
    let vs = qp.vertices()?;
    for u in [1.0, 2.0] {
        let u = DVector::from_element(1, u);
        let gens: Vec<f64> = clarke_subdiff_g0(&qp, vs, &u, 1e-9).iter().map(|g| g[0]).collect();
        println!("u = {}: Clarke generators {gens:?}", u[0]);
        for seed in [0, 1, 2] {
            let out = certify(&qp, &u, 1.0, seed, 1e-9)?;
            println!(
                "  seed {seed}: {:?} ({:?}) in {} iterations, bound {}",
                out.verdict,
                out.reason,
                out.while_iterations,
                while_iteration_bound(&qp, vs, &out.u_bar, 1.0)
            );
        }
        println!("  zeta = {}, lambda = {}", zeta(&qp, vs, &u), lambda(&qp, vs, &u));
    }
    Ok(())
}

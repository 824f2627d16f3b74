//! The variational form `g_eps(u)` of a concave QP: evaluation, gradient,
//! descent to a critical point and recovery of the primal solution.
//!
//! ```bash
//! cargo run --example variational_qp
//! ```

use nalgebra::DVector;

use entroqp::descent::{anneal, default_delta, default_start, descend, recover_primal};
use entroqp::instances;
use entroqp::qp::{g_eps, grad_g_eps, solve_qp_by_enumeration};

fn main() -> entroqp::Result<()> {
    // -1/2 (z'x)^2 + c'x on the unit cube, z = (-.5, -1, 1), c = (-1, .5, -1)
    let qp = instances::fig1();
    let vs = qp.vertices()?;
    let (best, value) = solve_qp_by_enumeration(&qp, vs);
    println!("vertex minimum {value} at {:?}", vs.vertices[best[0]].rows(0, 3).as_slice());

    for u in [-1.0, 0.0, 0.5, 1.0] {
        let u = DVector::from_element(1, u);
        println!(
            "u = {:>4}: g_0 = {:>8.5}, g_0.1 = {:>8.5}, grad g_0.1 = {:>8.5}",
            u[0],
            g_eps(&qp, 0.0, &u)?,
            g_eps(&qp, 0.1, &u)?,
            grad_g_eps(&qp, 0.1, &u)?[0]
        );
    }

    let delta = default_delta(&qp)?;
    let r = descend(&qp, 0.01, &default_start(&qp)?, delta, 5000)?;
    println!("descend: u = {:.8}, |grad| = {:.1e}, {} iterations", r.u[0], r.grad_norm, r.iterations);

    let a = anneal(&qp, &[0.5, 0.1, 0.02, 0.01], delta, 5000)?;
    println!("anneal:  u = {:.8} after {} iterations", a.u[0], a.iterations);

    let x = recover_primal(&qp, 0.01, &a.u)?;
    println!("recovered x = {:.6?}", x.rows(0, 3).as_slice());
    Ok(())
}

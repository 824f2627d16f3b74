//! Without a strictly concave objective the rate drops to linear: the
//! convex and indefinite one-dimensional counterexamples.
//!
//! ```bash
//! cargo run --example slow_rates
//! ```

use entroqp::rates::{convex_counterexample, indefinite_counterexample, lambert_w0};

fn main() -> entroqp::Result<()> {
    println!("W0(1) = {:.15}  W0(e) = {}", lambert_w0(1.0)?, lambert_w0(std::f64::consts::E)?);
    println!("{:>8} {:>14} {:>12} {:>14} {:>8}", "eps", "x_bar", "dist/eps", "cost/(eps^2/2)", "y_bar");
    for eps in [0.5, 0.1, 1e-2, 1e-3, 1e-4, 1e-6] {
        let c = convex_counterexample(eps)?;
        let i = indefinite_counterexample(eps)?;
        println!(
            "{eps:>8} {:>14.10} {:>12.6} {:>14.6} {:>8}",
            c.x_bar,
            c.dist_gap / eps,
            c.cost_gap / (0.5 * eps * eps),
            i.y_bar
        );
    }
    Ok(())
}

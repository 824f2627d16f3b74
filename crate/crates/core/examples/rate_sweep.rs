//! Exponential convergence of `x*_eps` to the optimal face: sweeps
//! `eps = 2^-k`, compares against the theoretical bounds and fits the rate.
//!
//! ```bash
//! cargo run --release --example rate_sweep
//! ```

use entroqp::instances;
use entroqp::polytope::constants;
use entroqp::qp::rate_constants;
use entroqp::rates::{check_distance_bound, distance_bound, fit_rate, sweep, SolverConfig};

fn main() -> entroqp::Result<()> {
    let qp = instances::fig1();
    let vs = qp.vertices()?;
    let pc = constants(qp.polytope(), vs)?;
    let k = rate_constants(&qp, vs, &pc)?;
    println!(
        "alpha {:.4}, gamma {:.4}, Delta {:.4}, eps_max {:.5}",
        k.alpha, k.gamma, k.delta, k.epsilon_max
    );

    let eps: Vec<f64> = (2..=12).map(|j| 0.5f64.powi(j)).collect();
    let records = sweep(&qp, vs, &eps, &SolverConfig::default())?;
    let ok = check_distance_bound(&records, &k, &pc);
    println!("{:>12} {:>12} {:>12} {:>8}", "eps", "dist", "bound", "holds");
    for (r, ok) in records.iter().zip(&ok) {
        let holds = ok.map_or("-".to_string(), |b| b.to_string());
        println!("{:>12.3e} {:>12.3e} {:>12.3e} {holds:>8}", r.epsilon, r.dist, distance_bound(r.epsilon, &k, &pc));
    }
    let fit = fit_rate(&records)?;
    println!("log dist ~ {:.4} / eps + {:.3} (R^2 = {:.5}, {} points)", fit.slope, fit.intercept, fit.r_squared, fit.points);
    Ok(())
}

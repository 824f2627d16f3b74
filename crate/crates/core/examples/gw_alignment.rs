//! Gromov-Wasserstein alignment of two kernel spaces and of two centered
//! point clouds, with the coupling certified as a local minimizer.
//!
//! ```bash
//! cargo run --release --example gw_alignment
//! ```

use nalgebra::DVector;

use entroqp::gw::{assemble, egw_value, euclidean_quadratic_assemble, gaussian_kernel, gw_align, DiscreteMmSpace};
use entroqp::rates::SolverConfig;

fn pts(raw: &[[f64; 2]]) -> Vec<DVector<f64>> {
    raw.iter().map(|p| DVector::from_row_slice(p)).collect()
}

fn main() -> entroqp::Result<()> {
    let tri = pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]);
    // the same triangle listed in another order
    let shuffled = pts(&[[0.0, 2.0], [0.0, 0.0], [1.0, 0.0]]);
    let w = vec![1.0 / 3.0; 3];
    let s0 = DiscreteMmSpace::new(gaussian_kernel(&tri, 4.0), w.clone())?;
    let s1 = DiscreteMmSpace::new(gaussian_kernel(&shuffled, 4.0), w.clone())?;
    let problem = assemble(&s0, &s1, 1.0)?;
    println!("GW^2 = {:.3e}", egw_value(&problem, 0.0, &SolverConfig::default())?);

    let a = gw_align(&problem, 1e-3, None, 7)?;
    println!("coupling (rows: space1 points, columns: space0 points)\n{:.4}", a.coupling.matrix);
    println!("cost {:.2e}, certificate {:?}", a.cost, a.certificate.verdict);

    let c0 = pts(&[[1.0, 0.0], [-0.5, 0.8], [-0.5, -0.8]]);
    let c1 = pts(&[[0.0, 1.0], [0.6, -0.5], [-0.6, -0.5]]);
    let e = euclidean_quadratic_assemble(&c0, &c1, &w, &w)?;
    let b = gw_align(&e, 1e-2, None, 7)?;
    println!("euclidean: GW^2 = {:.6}, aligned cost {:.6}", egw_value(&e, 0.0, &SolverConfig::default())?, b.cost);
    println!("{:.4}", b.coupling.matrix);
    Ok(())
}

//! Log-domain Sinkhorn for entropic optimal transport.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::log_sum_exp;
use crate::lp::entropic::{EntropicLpSolution, DUAL_TOL};

pub const SINKHORN_MAX_ITER: usize = 1_000_000;

fn check_probability(name: &str, w: &[f64]) -> Result<()> {
    if w.is_empty() || w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::NonProbability(format!("{name} must be strictly positive")));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::NonProbability(format!("{name} sums to {s}")));
    }
    Ok(())
}

/// Entropic OT between `mu` (rows of `cost`) and `nu` (columns).
///
/// The coupling is `pi_ij = exp((f_i + g_j - C_ij)/eps - 1)`, returned flattened
/// row-major so that `x[i * nu.len() + j] = pi_ij`. That matches the transport
/// polytope layout of [`crate::polytope::Polytope::transport`]. The dual `y`
/// is the concatenation `(f, g)`.
pub fn sinkhorn(
    mu: &[f64],
    nu: &[f64],
    cost: &DMatrix<f64>,
    epsilon: f64,
) -> Result<EntropicLpSolution> {
    check_probability("mu", mu)?;
    check_probability("nu", nu)?;
    if !(epsilon > 0.0) {
        return Err(Error::EpsilonNonpositive(epsilon));
    }
    let (n0, n1) = (mu.len(), nu.len());
    if cost.shape() != (n0, n1) {
        return Err(Error::DimensionMismatch(format!(
            "cost is {}x{}, marginals are {n0} and {n1}",
            cost.nrows(),
            cost.ncols()
        )));
    }
    let log_mu: Vec<f64> = mu.iter().map(|v| v.ln()).collect();
    let log_nu: Vec<f64> = nu.iter().map(|v| v.ln()).collect();
    let mut f = vec![0.0; n0];
    let mut g = vec![0.0; n1];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < SINKHORN_MAX_ITER {
        for i in 0..n0 {
            let lse = log_sum_exp((0..n1).map(|j| (g[j] - cost[(i, j)]) / epsilon - 1.0));
            f[i] = epsilon * (log_mu[i] - lse);
        }
        for j in 0..n1 {
            let lse = log_sum_exp((0..n0).map(|i| (f[i] - cost[(i, j)]) / epsilon - 1.0));
            g[j] = epsilon * (log_nu[j] - lse);
        }
        iterations += 1;
        // Columns are exact after the g-update; rows carry the error.
        residual = (0..n0)
            .map(|i| {
                let s: f64 = (0..n1)
                    .map(|j| ((f[i] + g[j] - cost[(i, j)]) / epsilon - 1.0).exp())
                    .sum();
                (s - mu[i]).abs()
            })
            .fold(0.0, f64::max);
        if residual <= DUAL_TOL {
            break;
        }
    }
    if residual > DUAL_TOL {
        return Err(Error::MaxIterations { iterations, residual });
    }
    let mut log_x = DVector::zeros(n0 * n1);
    for i in 0..n0 {
        for j in 0..n1 {
            log_x[i * n1 + j] = (f[i] + g[j] - cost[(i, j)]) / epsilon - 1.0;
        }
    }
    let x = log_x.map(f64::exp);
    let value = (0..n0 * n1)
        .map(|k| x[k] * (cost[(k / n1, k % n1)] + epsilon * log_x[k]))
        .sum();
    let dual_value = mu.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>()
        + nu.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
        - epsilon * x.sum();
    let y = DVector::from_iterator(n0 + n1, f.into_iter().chain(g));
    Ok(EntropicLpSolution { x, log_x, y, epsilon, value, dual_value, iterations, residual })
}

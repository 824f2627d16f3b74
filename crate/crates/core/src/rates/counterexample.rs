//! Closed-form instances where the entropic gap decays only polynomially.

use serde::Serialize;

use super::lambert::lambert_w0_exp;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvexGap {
    pub epsilon: f64,
    pub x_bar: f64,
    pub dist_gap: f64,
    pub cost_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IndefiniteGap {
    pub epsilon: f64,
    pub x_bar: f64,
    pub y_bar: f64,
    pub dist_gap: f64,
    pub cost_gap: f64,
}

/// `min_{x in [0,2]} x^2/2 - x + eps x log x`. The minimizer solves
/// `x e^{x/eps} = e^{1/eps - 1}`, i.e. `x = eps W0(e^{1/eps - 1} / eps)`;
/// with `x* = 1` the cost gap `x^2/2 - x + 1/2` equals `(x - 1)^2 / 2`.
pub fn convex_counterexample(epsilon: f64) -> Result<ConvexGap> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::BadInput(format!("epsilon must lie in (0, 0.5], got {epsilon}")));
    }
    let log_z = 1.0 / epsilon - 1.0 - epsilon.ln();
    let x_bar = epsilon * lambert_w0_exp(log_z)?;
    let d = x_bar - 1.0;
    Ok(ConvexGap { epsilon, x_bar, dist_gap: d.abs(), cost_gap: 0.5 * d * d })
}

/// The convex instance in `x` plus `-y^2/2 - y + eps y log y` in `y`, both on
/// `[0, 2]`. The `y` part decreases on `[0, 2]` for `eps <= 1`, so `y = 2`
/// for every such `eps` and contributes nothing to either gap.
pub fn indefinite_counterexample(epsilon: f64) -> Result<IndefiniteGap> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::BadInput(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    // The x part is the convex instance; its closed form holds past 0.5 too.
    let log_z = 1.0 / epsilon - 1.0 - epsilon.ln();
    let x_bar = epsilon * lambert_w0_exp(log_z)?;
    let d = x_bar - 1.0;
    Ok(IndefiniteGap { epsilon, x_bar, y_bar: 2.0, dist_gap: d.abs(), cost_gap: 0.5 * d * d })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationarity_of_closed_form() {
        for eps in [0.5, 0.1, 1e-2, 1e-3, 1e-4] {
            let g = convex_counterexample(eps).unwrap();
            // derivative of x^2/2 - x + eps x log x
            let slope = g.x_bar - 1.0 + eps * (g.x_bar.ln() + 1.0);
            assert!(slope.abs() < 1e-12, "eps {eps}: {slope:e}");
            assert!((0.0..=2.0).contains(&g.x_bar));
        }
    }

    #[test]
    fn y_part_is_decreasing() {
        for eps in [0.05, 0.5, 1.0] {
            let f = |y: f64| -0.5 * y * y - y + eps * y * y.ln();
            let mut prev = f(1e-9);
            for k in 1..=200 {
                let y = 0.01 * k as f64;
                assert!(f(y) < prev);
                prev = f(y);
            }
            assert_eq!(indefinite_counterexample(eps).unwrap().y_bar, 2.0);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(convex_counterexample(0.6).is_err());
        assert!(indefinite_counterexample(0.0).is_err());
    }
}

//! Gradient descent on `g_eps` down to a `delta`-critical point, with
//! optional annealing of `eps`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::op_norm;
use crate::lp::{solve_entropic_lp, solve_lp, EntropicOptions};
use crate::polytope::Polytope;
use crate::qp::{g_eval_with, ConcaveQp, GEval};

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone)]
pub struct DescentResult {
    pub u: DVector<f64>,
    /// Inner entropic LP solution at `u`.
    pub x: DVector<f64>,
    pub grad_norm: f64,
    pub g_value: f64,
    pub iterations: usize,
    pub epsilon: f64,
    /// `grad_norm <= delta` was reached. When false the result is the best
    /// iterate after the iteration cap or a stalled line search.
    pub converged: bool,
    /// Gradient norm at every iterate, the start included.
    pub trace: Vec<f64>,
}

/// `max 1'x` over the polytope.
pub fn max_one_norm(p: &Polytope) -> Result<f64> {
    let ones = DVector::from_element(p.n(), -1.0);
    Ok(-solve_lp(p, &ones)?.value)
}

/// `1e-8 (1 + |B|_op R1)`.
pub fn default_delta(qp: &ConcaveQp) -> Result<f64> {
    Ok(1e-8 * (1.0 + op_norm(qp.b()) * max_one_norm(qp.polytope())?))
}

/// `B` applied to the maximum-entropy point of the polytope.
pub fn default_start(qp: &ConcaveQp) -> Result<DVector<f64>> {
    let zero = DVector::zeros(qp.n());
    let s = solve_entropic_lp(qp.polytope(), &zero, 1.0, &EntropicOptions::default())?;
    Ok(qp.b() * s.x)
}

fn eval(qp: &ConcaveQp, eps: f64, u: &DVector<f64>, warm: Option<&DVector<f64>>) -> Result<GEval> {
    let opts = EntropicOptions { warm_start: warm.cloned(), ..Default::default() };
    g_eval_with(qp, eps, u, &opts)
}

/// Armijo backtracking descent (constant `1e-4`, halving, unit initial step).
pub fn descend(
    qp: &ConcaveQp,
    epsilon: f64,
    u0: &DVector<f64>,
    delta: f64,
    max_iter: usize,
) -> Result<DescentResult> {
    if !(epsilon > 0.0) {
        return Err(Error::EpsilonNonpositive(epsilon));
    }
    if !(delta > 0.0) {
        return Err(Error::BadInput(format!("delta must be positive, got {delta}")));
    }
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadInput("start point must be finite".into()));
    }
    let mut u = u0.clone();
    let mut cur = eval(qp, epsilon, &u, None)?;
    let mut gn = cur.grad.norm();
    let mut trace = vec![gn];
    let mut iterations = 0;
    let mut converged = gn <= delta;
    while !converged && iterations < max_iter {
        let gsq = gn * gn;
        let noise = 1e-12_f64.min(1e-13 * (1.0 + cur.value.abs()));
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &u - t * &cur.grad;
            if trial == u {
                break;
            }
            let e = eval(qp, epsilon, &trial, cur.dual.as_ref())?;
            if e.value <= cur.value - ARMIJO * t * gsq + noise {
                next = Some((trial, e));
                break;
            }
            t *= 0.5;
        }
        let Some((un, en)) = next else {
            log::debug!("line search stalled at |grad| = {gn:e}");
            break;
        };
        u = un;
        cur = en;
        gn = cur.grad.norm();
        trace.push(gn);
        iterations += 1;
        converged = gn <= delta;
    }
    Ok(DescentResult {
        u,
        x: cur.x,
        grad_norm: gn,
        g_value: cur.value,
        iterations,
        epsilon,
        converged,
        trace,
    })
}

/// Runs [`descend`] over a strictly decreasing schedule, warm-starting each
/// stage from the previous `u`. Starts from [`default_start`].
pub fn anneal(
    qp: &ConcaveQp,
    schedule: &[f64],
    delta: f64,
    max_iter_per_stage: usize,
) -> Result<DescentResult> {
    anneal_from(qp, schedule, &default_start(qp)?, delta, max_iter_per_stage)
}

pub fn anneal_from(
    qp: &ConcaveQp,
    schedule: &[f64],
    u0: &DVector<f64>,
    delta: f64,
    max_iter_per_stage: usize,
) -> Result<DescentResult> {
    if schedule.is_empty() {
        return Err(Error::BadSchedule("empty schedule".into()));
    }
    if schedule.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::BadSchedule("entries must be positive and finite".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::BadSchedule("schedule must be strictly decreasing".into()));
    }
    let mut u = u0.clone();
    let mut total = 0;
    let mut trace = Vec::new();
    let mut last = None;
    for (stage, &eps) in schedule.iter().enumerate() {
        let r = descend(qp, eps, &u, delta, max_iter_per_stage)
            .map_err(|e| Error::Stage { stage, source: Box::new(e) })?;
        u = r.u.clone();
        total += r.iterations;
        trace.extend_from_slice(&r.trace);
        last = Some(r);
    }
    let mut r = last.expect("nonempty schedule");
    r.iterations = total;
    r.trace = trace;
    Ok(r)
}

/// The entropic LP solution for cost `c - B'u`.
pub fn recover_primal(qp: &ConcaveQp, epsilon: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::EpsilonNonpositive(epsilon));
    }
    Ok(g_eval_with(qp, epsilon, u, &EntropicOptions::default())?.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn critical_start_takes_no_steps() {
        let qp = instances::fig1();
        let first = descend(&qp, 0.05, &dv(&[0.5]), 1e-9, 500).unwrap();
        let again = descend(&qp, 0.05, &first.u, 1e-6, 500).unwrap();
        assert_eq!(again.iterations, 0);
        assert_eq!(again.u, first.u);
    }

    #[test]
    fn trace_is_monotone_in_value_and_ends_below_delta() {
        let qp = instances::fig3();
        let r = descend(&qp, 0.05, &dv(&[0.0]), 1e-8, 1000).unwrap();
        assert!(r.converged && r.grad_norm <= 1e-8);
        assert_eq!(r.trace.len(), r.iterations + 1);
    }

    #[test]
    fn anneal_rejects_bad_schedules() {
        let qp = instances::fig1();
        assert!(matches!(anneal(&qp, &[], 1e-8, 10), Err(Error::BadSchedule(_))));
        assert!(matches!(anneal(&qp, &[0.1, 0.2], 1e-8, 10), Err(Error::BadSchedule(_))));
        assert!(matches!(anneal(&qp, &[0.1, -0.2], 1e-8, 10), Err(Error::BadSchedule(_))));
    }

    #[test]
    fn single_stage_anneal_is_descend() {
        let qp = instances::fig1();
        let u0 = default_start(&qp).unwrap();
        let a = anneal(&qp, &[0.1], 1e-8, 500).unwrap();
        let d = descend(&qp, 0.1, &u0, 1e-8, 500).unwrap();
        assert_eq!(a.u, d.u);
        assert_eq!(a.iterations, d.iterations);
    }

    #[test]
    fn recovered_primal_is_feasible() {
        let qp = instances::fig3();
        for u in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            let x = recover_primal(&qp, 0.02, &dv(&[u])).unwrap();
            assert!(qp.polytope().residual(&x) <= crate::lp::DUAL_TOL);
        }
    }
}

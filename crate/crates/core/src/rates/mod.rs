//! Rate studies: epsilon sweeps against the enumeration oracle, the
//! exponential-gap bounds, and the closed-form slow-rate instances.

pub mod counterexample;
pub mod lambert;

use nalgebra::DVector;
use rayon::prelude::*;

pub use counterexample::{convex_counterexample, indefinite_counterexample, ConvexGap, IndefiniteGap};
pub use lambert::{lambert_w0, lambert_w0_exp};

use crate::descent::{anneal_from, default_delta, default_start, descend, DescentResult};
use crate::error::{Error, Result};
use crate::linalg::{op_norm, project_onto_hull};
use crate::lp::{solve_entropic_lp, EntropicOptions};
use crate::polytope::{PolytopeConstants, VertexSet};
use crate::qp::{solve_qp_by_enumeration, ConcaveQp, RateConstants};

/// Distances at or below this are numerical noise and excluded from fits.
pub const UNDERFLOW_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Criticality target; `None` picks [`default_delta`].
    pub delta: Option<f64>,
    pub max_iter: usize,
    /// The annealed start runs `eps * factor^k` for `k = stages..=0`.
    pub anneal_factor: f64,
    pub anneal_stages: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { delta: None, max_iter: 5000, anneal_factor: 4.0, anneal_stages: 6 }
    }
}

#[derive(Debug, Clone)]
pub struct RateRecord {
    pub epsilon: f64,
    /// Euclidean distance from `x*_eps` to the hull of the optimal vertices.
    pub dist: f64,
    /// Cost gap clamped at zero; the raw value is kept alongside.
    pub cost_gap: f64,
    pub raw_cost_gap: f64,
    pub g_eps_min: f64,
    pub iterations: usize,
    pub u: DVector<f64>,
    pub x: DVector<f64>,
    /// Solver failure for this epsilon, if any. Numeric fields are NaN then.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Index into the record list where the fitted window starts.
    pub tail_start: usize,
    pub points: usize,
}

/// Best of several descents on `g_eps`: one from every distinct `Bv_i` plus
/// one annealed from the max-entropy image. Lowest `g_eps` wins; ties go to
/// the earlier start.
pub fn global_solve(qp: &ConcaveQp, vs: &VertexSet, epsilon: f64, cfg: &SolverConfig) -> Result<DescentResult> {
    let delta = match cfg.delta {
        Some(d) => d,
        None => default_delta(qp)?,
    };
    let mut starts: Vec<DVector<f64>> = Vec::new();
    for v in vs.iter() {
        let bv = qp.b() * v;
        if !starts.iter().any(|s| (s - &bv).norm() <= 1e-12) {
            starts.push(bv);
        }
    }
    let mut best: Option<DescentResult> = None;
    let mut total = 0;
    let mut consider = |r: DescentResult, best: &mut Option<DescentResult>| {
        total += r.iterations;
        if best.as_ref().is_none_or(|b| r.g_value < b.g_value) {
            *best = Some(r);
        }
    };
    for s in &starts {
        consider(descend(qp, epsilon, s, delta, cfg.max_iter)?, &mut best);
    }
    let schedule: Vec<f64> = (0..=cfg.anneal_stages)
        .rev()
        .map(|k| epsilon * cfg.anneal_factor.powi(k as i32))
        .collect();
    consider(anneal_from(qp, &schedule, &default_start(qp)?, delta, cfg.max_iter)?, &mut best);
    let mut r = best.expect("at least one start");
    r.iterations = total;
    Ok(r)
}

/// Inner solution at `u` with a feasibility residual tighter than the
/// default, so that exponentially small distances stay resolvable.
fn sharp_primal(qp: &ConcaveQp, epsilon: f64, u: &DVector<f64>, fallback: &DVector<f64>) -> DVector<f64> {
    let opts = EntropicOptions { tol: 1e-13, ..Default::default() };
    match solve_entropic_lp(qp.polytope(), &qp.linear_cost(u), epsilon, &opts) {
        Ok(s) => s.x,
        Err(_) => fallback.clone(),
    }
}

fn record(qp: &ConcaveQp, vs: &VertexSet, epsilon: f64, cfg: &SolverConfig) -> RateRecord {
    let (opt, best) = solve_qp_by_enumeration(qp, vs);
    let hull: Vec<DVector<f64>> = opt.iter().map(|&i| vs.vertices[i].clone()).collect();
    match global_solve(qp, vs, epsilon, cfg) {
        Ok(r) => {
            let x = sharp_primal(qp, epsilon, &r.u, &r.x);
            let dist = (&x - project_onto_hull(&x, &hull)).norm();
            let raw = qp.objective(&x) - best;
            RateRecord {
                epsilon,
                dist,
                cost_gap: raw.max(0.0),
                raw_cost_gap: raw,
                g_eps_min: r.g_value,
                iterations: r.iterations,
                u: r.u,
                x,
                failure: None,
            }
        }
        Err(e) => RateRecord {
            epsilon,
            dist: f64::NAN,
            cost_gap: f64::NAN,
            raw_cost_gap: f64::NAN,
            g_eps_min: f64::NAN,
            iterations: 0,
            u: DVector::zeros(0),
            x: DVector::zeros(0),
            failure: Some(e.to_string()),
        },
    }
}

/// Warns when the argmin is not the hull of the optimal vertices, which
/// would make the hull distance the wrong target.
fn check_argmin_face(qp: &ConcaveQp, vs: &VertexSet) {
    let (opt, best) = solve_qp_by_enumeration(qp, vs);
    for (a, &i) in opt.iter().enumerate() {
        for &j in &opt[a + 1..] {
            let mid = (&vs.vertices[i] + &vs.vertices[j]) * 0.5;
            if qp.objective(&mid) > best + 1e-9 * (1.0 + best.abs()) {
                log::warn!("optimal vertices {i} and {j} are not joined by an optimal segment");
            }
        }
    }
}

/// Worker count from `ENTROQP_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("ENTROQP_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// One record per epsilon, in input order. Epsilons run in parallel.
pub fn sweep(qp: &ConcaveQp, vs: &VertexSet, epsilons: &[f64], cfg: &SolverConfig) -> Result<Vec<RateRecord>> {
    if epsilons.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::BadInput("epsilons must be positive and finite".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::BadInput("epsilons must be strictly decreasing".into()));
    }
    check_argmin_face(qp, vs);
    let run = || epsilons.par_iter().map(|&e| record(qp, vs, e, cfg)).collect::<Vec<_>>();
    match thread_cap() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::NumericalFailure(e.to_string()))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

/// `2 R1 exp(-Delta/(2 eps R1) + (R1 + RH)/R1)`.
pub fn distance_bound(epsilon: f64, k: &RateConstants, pc: &PolytopeConstants) -> f64 {
    2.0 * pc.r1 * (-k.delta / (2.0 * epsilon * pc.r1) + (pc.r1 + pc.rh) / pc.r1).exp()
}

/// `K exp(-Delta/(eps R1) + (R1 + RH)/R1)` with `K = max{4 R1^2 |M|_op, 2 |c| R1}`.
pub fn cost_bound(epsilon: f64, qp: &ConcaveQp, k: &RateConstants, pc: &PolytopeConstants) -> f64 {
    let m_op = op_norm(qp.b()).powi(2);
    let kk = (4.0 * pc.r1 * pc.r1 * m_op).max(2.0 * qp.c().norm() * pc.r1);
    kk * (-k.delta / (epsilon * pc.r1) + (pc.r1 + pc.rh) / pc.r1).exp()
}

/// Distance bound per record; `None` where `eps >= epsilon_max` (not covered)
/// or the record failed.
pub fn check_distance_bound(records: &[RateRecord], k: &RateConstants, pc: &PolytopeConstants) -> Vec<Option<bool>> {
    records
        .iter()
        .map(|r| {
            (r.failure.is_none() && r.epsilon < k.epsilon_max)
                .then(|| r.dist <= distance_bound(r.epsilon, k, pc))
        })
        .collect()
}

/// Cost bound per record, same coverage rule as [`check_distance_bound`].
pub fn check_cost_bound(
    records: &[RateRecord],
    qp: &ConcaveQp,
    k: &RateConstants,
    pc: &PolytopeConstants,
) -> Vec<Option<bool>> {
    records
        .iter()
        .map(|r| {
            (r.failure.is_none() && r.epsilon < k.epsilon_max)
                .then(|| r.raw_cost_gap <= cost_bound(r.epsilon, qp, k, pc))
        })
        .collect()
}

/// Least-squares line through `(1/eps, ln dist)`.
///
/// Only records with `dist > 1e-14` are used. The window is the longest
/// strictly decreasing suffix of those records, or all of them if that
/// suffix has fewer than three points.
pub fn fit_rate(records: &[RateRecord]) -> Result<RateFit> {
    let usable: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].dist.is_finite() && records[i].dist > UNDERFLOW_FLOOR)
        .collect();
    if usable.len() < 4 {
        return Err(Error::InsufficientData { usable: usable.len(), required: 4 });
    }
    let mut start = usable.len() - 1;
    while start > 0 && records[usable[start - 1]].dist > records[usable[start]].dist {
        start -= 1;
    }
    if usable.len() - start < 3 {
        start = 0;
    }
    let idx = &usable[start..];
    let xs: Vec<f64> = idx.iter().map(|&i| 1.0 / records[i].epsilon).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| records[i].dist.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit { slope, intercept, r_squared, tail_start: idx[0], points: idx.len() })
}

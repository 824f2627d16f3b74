//! Certification of candidate local minimizers of `g_0`.
//!
//! From a near-critical point `u_eps` of `g_eps` the candidate is
//! `u_bar = B x_bar` with `x_bar` an LP vertex for cost `c - B'u_eps`. The
//! candidate is then probed along a random direction `w` at shrinking radius
//! `eta`: equal images `B x_+ = B x_-` at `u_bar +- eta w` mean `u_bar` is
//! interior to its cell (a local minimizer), equal scores mean it sits on a
//! cell boundary.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::solve_lp;
use crate::polytope::VertexSet;
use crate::qp::{cell_membership, CellGeometry, ConcaveQp, CELL_TOL};

/// Hard cap on probe-radius halvings before giving up.
pub const MAX_HALVINGS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    LocalMinimizer,
    NotLocalMinimizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reason {
    NecessaryConditionViolated,
    BoundaryPoint,
    InteriorMatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateOutcome {
    pub verdict: Verdict,
    pub reason: Reason,
    pub u_bar: DVector<f64>,
    pub x_bar: DVector<f64>,
    pub while_iterations: usize,
    pub rng_seed: u64,
}

/// Unit vector drawn uniformly from the sphere in `R^r`.
pub fn sample_sphere(r: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    if r == 0 {
        return DVector::zeros(0);
    }
    loop {
        let z = DVector::from_fn(r, |_, _| StandardNormal.sample(rng));
        let n: f64 = z.norm();
        if n > 1e-300 {
            return z / n;
        }
    }
}

/// `(c - B'u_bar)'x_bar <= min_K (c - B'u_bar)'x + tol`.
pub fn necessary_condition(
    qp: &ConcaveQp,
    u_bar: &DVector<f64>,
    x_bar: &DVector<f64>,
    tol: f64,
) -> Result<bool> {
    let cost = qp.linear_cost(u_bar);
    let best = solve_lp(qp.polytope(), &cost)?.value;
    Ok(cost.dot(x_bar) <= best + tol)
}

/// Runs the certification with probe radius `eta0` and a direction drawn
/// from `ChaCha8Rng::seed_from_u64(seed)`. Equality tests use the absolute
/// tolerance `tol (1 + |s|)`.
///
/// The scores follow the convention `s = 1/2 |u_bar|^2 + min_K (c - B'u_bar)'x`
/// and `s_pm = 1/2 |u_bar|^2 + (c - B'u_bar)'x_pm`.
pub fn certify(
    qp: &ConcaveQp,
    u_eps: &DVector<f64>,
    eta0: f64,
    seed: u64,
    tol: f64,
) -> Result<CertificateOutcome> {
    if !(eta0 > 0.0) || !eta0.is_finite() {
        return Err(Error::BadInput(format!("eta0 must be positive, got {eta0}")));
    }
    if u_eps.len() != qp.r() {
        return Err(Error::DimensionMismatch(format!(
            "u has {} entries, B has {} rows",
            u_eps.len(),
            qp.r()
        )));
    }
    let p = qp.polytope();
    let x_bar = solve_lp(p, &qp.linear_cost(u_eps))?.x;
    let u_bar = qp.b() * &x_bar;
    let outcome = |verdict, reason, iters| CertificateOutcome {
        verdict,
        reason,
        u_bar: u_bar.clone(),
        x_bar: x_bar.clone(),
        while_iterations: iters,
        rng_seed: seed,
    };

    let cost_bar = qp.linear_cost(&u_bar);
    let min_bar = solve_lp(p, &cost_bar)?.value;
    let half = 0.5 * u_bar.norm_squared();
    let s = half + min_bar;
    let tol_s = tol * (1.0 + s.abs());
    if cost_bar.dot(&x_bar) > min_bar + tol_s {
        return Ok(outcome(Verdict::NotLocalMinimizer, Reason::NecessaryConditionViolated, 0));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = sample_sphere(qp.r(), &mut rng);
    let mut eta = eta0;
    for iter in 1..=MAX_HALVINGS + 1 {
        let up = &u_bar + eta * &w;
        let um = &u_bar - eta * &w;
        let xp = solve_lp(p, &qp.linear_cost(&up))?.x;
        let xm = solve_lp(p, &qp.linear_cost(&um))?.x;
        if (qp.b() * &xp - qp.b() * &xm).norm() <= tol_s {
            return Ok(outcome(Verdict::LocalMinimizer, Reason::InteriorMatch, iter));
        }
        let sp = half + cost_bar.dot(&xp);
        let sm = half + cost_bar.dot(&xm);
        if (sp - s).abs() <= tol_s && (sm - s).abs() <= tol_s {
            return Ok(outcome(Verdict::NotLocalMinimizer, Reason::BoundaryPoint, iter));
        }
        eta *= 0.5;
    }
    Err(Error::Inconclusive { halvings: MAX_HALVINGS })
}

/// Exact classification from the vertex set: `u` is a local minimizer of
/// `g_0` iff every cell containing it has the same image `Bv = u` and `u`
/// is interior to that cell.
pub fn is_local_minimizer(qp: &ConcaveQp, vs: &VertexSet, u: &DVector<f64>) -> bool {
    let cells = cell_membership(qp, vs, u, CELL_TOL);
    let images: Vec<DVector<f64>> = cells.iter().map(|&i| qp.b() * &vs.vertices[i]).collect();
    if images.iter().any(|bv| (bv - u).norm() > 1e-9 * (1.0 + u.norm())) {
        return false;
    }
    cells
        .iter()
        .all(|&i| CellGeometry::new(qp, vs, i).boundary_distance(u) > CELL_TOL)
}

/// `zeta(u) = 1/2 dist(u, bd C_i)` for the cell containing `u`.
pub fn zeta(qp: &ConcaveQp, vs: &VertexSet, u: &DVector<f64>) -> f64 {
    cell_membership(qp, vs, u, CELL_TOL)
        .iter()
        .map(|&i| 0.5 * CellGeometry::new(qp, vs, i).boundary_distance(u).max(0.0))
        .fold(f64::INFINITY, f64::min)
}

/// `lambda(u)`: distance from `u` to the union of nonempty cells that do not
/// contain it; `+inf` when every nonempty cell contains `u`.
pub fn lambda(qp: &ConcaveQp, vs: &VertexSet, u: &DVector<f64>) -> f64 {
    let members = cell_membership(qp, vs, u, CELL_TOL);
    (0..vs.len())
        .filter(|i| !members.contains(i))
        .filter_map(|i| CellGeometry::new(qp, vs, i).project(u))
        .map(|p| (p - u).norm())
        .fold(f64::INFINITY, f64::min)
}

fn log2_ceil_pos(ratio: f64) -> usize {
    if ratio <= 1.0 {
        0
    } else {
        ratio.log2().ceil() as usize
    }
}

/// Upper bound on the probe-loop iterations at a candidate `u_bar`:
/// `max{0, ceil(log2(eta0/zeta))} + 1` when interior and
/// `max{0, ceil(log2(eta0/lambda))} + 2` on a boundary.
pub fn while_iteration_bound(qp: &ConcaveQp, vs: &VertexSet, u_bar: &DVector<f64>, eta0: f64) -> usize {
    let z = zeta(qp, vs, u_bar);
    if z > 0.5 * CELL_TOL {
        log2_ceil_pos(eta0 / z) + 1
    } else {
        log2_ceil_pos(eta0 / lambda(qp, vs, u_bar)) + 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NearCritical {
    /// Within `gamma` of no boundary and within `3 delta / 2` of `Bv_i`.
    NearLocalMin,
    /// Closer than `gamma` to the boundary of its cell.
    NearBoundary,
    Neither,
}

/// Classifies `u` by exact cell geometry: the alternatives a
/// `delta`-critical point of `g_eps` must fall into for small `eps`.
pub fn near_critical_classification(
    qp: &ConcaveQp,
    u: &DVector<f64>,
    delta: f64,
    gamma: f64,
    vs: &VertexSet,
) -> NearCritical {
    let cells = cell_membership(qp, vs, u, CELL_TOL);
    let mut near_min = false;
    for &i in &cells {
        let cell = CellGeometry::new(qp, vs, i);
        let d = cell.boundary_distance(u);
        if d < gamma {
            return NearCritical::NearBoundary;
        }
        let bv = qp.b() * &vs.vertices[i];
        let interior = cell.contains(&bv, 0.0) && cell.boundary_distance(&bv) > CELL_TOL;
        if interior && (u - bv).norm() < 1.5 * delta {
            near_min = true;
        }
    }
    if near_min {
        NearCritical::NearLocalMin
    } else {
        NearCritical::Neither
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn sphere_samples_are_unit_and_seeded() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for r in 1..5 {
            let w = sample_sphere(r, &mut a);
            assert!((w.norm() - 1.0).abs() < 1e-14);
            assert_eq!(w, sample_sphere(r, &mut b));
        }
    }

    #[test]
    fn example1_saddle_and_minimum() {
        let qp = instances::example1();
        let s = certify(&qp, &dv(&[1.0]), 1.0, 3, 1e-9).unwrap();
        assert_eq!(s.verdict, Verdict::NotLocalMinimizer);
        let m = certify(&qp, &dv(&[2.0]), 1.0, 3, 1e-9).unwrap();
        assert_eq!(m.verdict, Verdict::LocalMinimizer);
        assert_eq!(m.reason, Reason::InteriorMatch);
        assert_eq!(m.u_bar[0], 2.0);
    }

    #[test]
    fn one_d_bounds() {
        let qp = instances::example1();
        let vs = qp.vertices().unwrap();
        // cells are u <= 1 and u >= 1
        assert!((zeta(&qp, vs, &dv(&[2.0])) - 0.5).abs() < 1e-12);
        assert_eq!(zeta(&qp, vs, &dv(&[1.0])), 0.0);
        assert!(lambda(&qp, vs, &dv(&[1.0])).is_infinite());
        assert!((lambda(&qp, vs, &dv(&[2.0])) - 1.0).abs() < 1e-12);
        assert_eq!(while_iteration_bound(&qp, vs, &dv(&[2.0]), 1.0), 2);
        assert_eq!(while_iteration_bound(&qp, vs, &dv(&[1.0]), 1.0), 2);
    }

    #[test]
    fn necessary_condition_on_own_vertex() {
        let qp = instances::fig1();
        let vs = qp.vertices().unwrap();
        for v in vs.iter() {
            let u = qp.b() * v;
            let x = solve_lp(qp.polytope(), &qp.linear_cost(&u)).unwrap().x;
            assert!(necessary_condition(&qp, &u, &x, 1e-9).unwrap());
        }
    }

    #[test]
    fn exact_classifier_on_example1() {
        let qp = instances::example1();
        let vs = qp.vertices().unwrap();
        assert!(is_local_minimizer(&qp, vs, &dv(&[2.0])));
        assert!(!is_local_minimizer(&qp, vs, &dv(&[1.0])));
        assert!(!is_local_minimizer(&qp, vs, &dv(&[1.5])));
    }
}

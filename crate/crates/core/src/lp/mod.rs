//! Exact and entropically regularized linear programs over a [`Polytope`].

pub mod entropic;
pub mod simplex;
pub mod sinkhorn;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::polytope::{Polytope, VertexSet};

pub use entropic::{solve_entropic_lp, EntropicLpSolution, EntropicOptions, DUAL_TOL};
pub use sinkhorn::sinkhorn;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub value: f64,
    pub basis: Vec<usize>,
    pub pivots: usize,
}

/// Optimal vertex of `min c'x` over `p`. Ties are broken by Bland's rule.
pub fn solve_lp(p: &Polytope, c: &DVector<f64>) -> Result<LpSolution> {
    if c.len() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "cost has {} entries, polytope has {} variables",
            c.len(),
            p.n()
        )));
    }
    let (a, b) = p.reduced();
    let s = simplex::simplex(a, b, c)?;
    Ok(LpSolution { x: s.x, value: s.value, basis: s.basis, pivots: s.pivots })
}

/// Tolerance used to call two vertex values equal.
fn value_tol(v: f64, tol: f64) -> f64 {
    tol * (1.0 + v.abs())
}

/// Indices of vertices whose cost is within `tol * (1 + |min|)` of the minimum.
pub fn argmin_vertices(vs: &VertexSet, c: &DVector<f64>, tol: f64) -> Vec<usize> {
    let vals: Vec<f64> = vs.iter().map(|v| c.dot(v)).collect();
    let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let t = value_tol(best, tol);
    (0..vals.len()).filter(|&i| vals[i] <= best + t).collect()
}

#[derive(Debug, Clone)]
pub struct SuboptimalityGap {
    /// `+inf` when every vertex is optimal (serialized as `null`).
    pub kappa: f64,
    pub all_optimal: bool,
    pub optimal_vertices: Vec<usize>,
}

/// Gap between the best non-optimal vertex value and the optimal value.
pub fn kappa(vs: &VertexSet, c: &DVector<f64>) -> SuboptimalityGap {
    let opt = argmin_vertices(vs, c, 1e-9);
    let best = vs.iter().map(|v| c.dot(v)).fold(f64::INFINITY, f64::min);
    let next = (0..vs.len())
        .filter(|i| !opt.contains(i))
        .map(|i| c.dot(&vs.vertices[i]))
        .fold(f64::INFINITY, f64::min);
    let all = next == f64::INFINITY;
    SuboptimalityGap { kappa: next - best, all_optimal: all, optimal_vertices: opt }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::enumerate_vertices;
    use nalgebra::DMatrix;

    fn cube() -> Polytope {
        Polytope::box_to_standard(&[0.0; 3], &[1.0; 3]).unwrap()
    }

    fn fig1_cost() -> DVector<f64> {
        DVector::from_vec(vec![-1.0, 0.5, -1.0, 0.0, 0.0, 0.0])
    }

    #[test]
    fn cube_lp_matches_brute_force() {
        let p = cube();
        let s = solve_lp(&p, &fig1_cost()).unwrap();
        assert_eq!(&s.x.as_slice()[..3], &[1.0, 0.0, 1.0]);
        assert_eq!(s.value, -2.0);
    }

    #[test]
    fn argmin_and_kappa() {
        let p = cube();
        let vs = enumerate_vertices(&p).unwrap();
        let opt = argmin_vertices(&vs, &fig1_cost(), 1e-9);
        assert_eq!(opt.len(), 1);
        assert_eq!(&vs.vertices[opt[0]].as_slice()[..3], &[1.0, 0.0, 1.0]);
        let k = kappa(&vs, &fig1_cost());
        // runner-up is (1,1,1) at -1.5
        assert_eq!(k.kappa, 0.5);
        let k0 = kappa(&vs, &DVector::zeros(6));
        assert!(k0.all_optimal && k0.kappa.is_infinite());
        assert_eq!(k0.optimal_vertices.len(), 8);
    }

    #[test]
    fn simplex_gap() {
        let p = Polytope::validate(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_vec(vec![1.0]))
            .unwrap();
        let vs = enumerate_vertices(&p).unwrap();
        assert_eq!(kappa(&vs, &DVector::from_vec(vec![0.0, 1.0])).kappa, 1.0);
        assert_eq!(argmin_vertices(&vs, &DVector::from_vec(vec![1.0, 1.0]), 1e-9).len(), 2);
    }
}

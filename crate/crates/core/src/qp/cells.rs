//! Polyhedral cells `C_i = {u : vertex v_i is optimal for cost c - B'u}`.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{independent_rows, solve_square, RANK_TOL};
use crate::lp::simplex::simplex;
use crate::polytope::VertexSet;
use crate::qp::ConcaveQp;

/// Absolute tolerance on vertex-optimality comparisons.
pub const CELL_TOL: f64 = 1e-9;

const ZERO_NORMAL: f64 = 1e-14;

/// `C_i = {u : n_j'u <= o_j for all j}` with `n_j = B(v_j - v_i)` and
/// `o_j = c'(v_j - v_i)`. Constraints with a zero normal are dropped.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub index: usize,
    pub normals: Vec<DVector<f64>>,
    pub offsets: Vec<f64>,
    /// Radius of the largest inscribed ball, capped at 1; `None` for an empty cell.
    pub chebyshev_radius: Option<f64>,
}

impl CellGeometry {
    pub fn new(qp: &ConcaveQp, vs: &VertexSet, i: usize) -> Self {
        let vi = &vs.vertices[i];
        let bvi = qp.b() * vi;
        let cvi = qp.c().dot(vi);
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        let mut empty = false;
        for (j, vj) in vs.iter().enumerate() {
            if j == i {
                continue;
            }
            let nrm = qp.b() * vj - &bvi;
            let off = qp.c().dot(vj) - cvi;
            if nrm.norm() <= ZERO_NORMAL {
                if off < -CELL_TOL {
                    empty = true;
                }
                continue;
            }
            normals.push(nrm);
            offsets.push(off);
        }
        let mut cell = Self { index: i, normals, offsets, chebyshev_radius: None };
        if !empty {
            cell.chebyshev_radius = cell.chebyshev();
        }
        cell
    }

    pub fn is_empty(&self) -> bool {
        self.chebyshev_radius.is_none()
    }

    pub fn has_interior(&self) -> bool {
        self.chebyshev_radius.is_some_and(|r| r > CELL_TOL)
    }

    pub fn contains(&self, u: &DVector<f64>, tol: f64) -> bool {
        !self.is_empty()
            && self.normals.iter().zip(&self.offsets).all(|(n, &o)| n.dot(u) <= o + tol)
    }

    /// Signed distance to the boundary: `min_j (o_j - n_j'u)/|n_j|`.
    ///
    /// For a point inside the cell this is exactly `dist(u, bd C_i)`: a ball of
    /// radius `t` fits iff every slack is at least `t |n_j|`, redundant
    /// constraints included. `+inf` when the cell is the whole space.
    pub fn boundary_distance(&self, u: &DVector<f64>) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, &o)| (o - n.dot(u)) / n.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Euclidean projection of `u` onto the cell; `None` if the cell is empty.
    pub fn project(&self, u: &DVector<f64>) -> Option<DVector<f64>> {
        if self.is_empty() {
            return None;
        }
        Some(project_polyhedron(u, &self.normals, &self.offsets))
    }

    /// Largest inscribed ball radius by a Chebyshev LP, capped at 1.
    fn chebyshev(&self) -> Option<f64> {
        let k = self.normals.len();
        if k == 0 {
            return Some(1.0);
        }
        let r = self.normals[0].len();
        // variables: u+ (r), u- (r), t, slacks (k), t-slack
        let nv = 2 * r + 1 + k + 1;
        let mut a = DMatrix::zeros(k + 1, nv);
        let mut b = DVector::zeros(k + 1);
        for (j, (n, &o)) in self.normals.iter().zip(&self.offsets).enumerate() {
            for d in 0..r {
                a[(j, d)] = n[d];
                a[(j, r + d)] = -n[d];
            }
            a[(j, 2 * r)] = n.norm();
            a[(j, 2 * r + 1 + j)] = 1.0;
            b[j] = o;
        }
        a[(k, 2 * r)] = 1.0;
        a[(k, nv - 1)] = 1.0;
        b[k] = 1.0;
        let mut c = DVector::zeros(nv);
        c[2 * r] = -1.0;
        match simplex(&a, &b, &c) {
            Ok(s) => Some(s.x[2 * r]),
            Err(_) => None,
        }
    }
}

/// Projection of `p` onto `{u : n_j'u <= o_j}` by Hildreth's dual coordinate
/// ascent, polished by an exact solve on the active set.
pub fn project_polyhedron(p: &DVector<f64>, normals: &[DVector<f64>], offsets: &[f64]) -> DVector<f64> {
    let k = normals.len();
    let feasible = |u: &DVector<f64>, tol: f64| {
        normals.iter().zip(offsets).all(|(n, &o)| n.dot(u) <= o + tol * (1.0 + o.abs()))
    };
    if feasible(p, 0.0) {
        return p.clone();
    }
    let sq: Vec<f64> = normals.iter().map(|n| n.norm_squared()).collect();
    let mut lam = vec![0.0; k];
    let mut u = p.clone();
    for _ in 0..200_000 {
        let mut moved = 0.0_f64;
        for j in 0..k {
            let viol = normals[j].dot(&u) - offsets[j];
            let new = (lam[j] + viol / sq[j]).max(0.0);
            let d = new - lam[j];
            if d != 0.0 {
                u.axpy(-d, &normals[j], 1.0);
                lam[j] = new;
                moved = moved.max(d.abs() * sq[j].sqrt());
            }
        }
        if moved <= 1e-15 * (1.0 + u.amax()) {
            break;
        }
    }
    // Active-set polish.
    let active: Vec<usize> = (0..k).filter(|&j| lam[j] > 0.0).collect();
    if !active.is_empty() {
        let na = DMatrix::from_fn(active.len(), p.len(), |i, d| normals[active[i]][d]);
        let rows = independent_rows(&na, RANK_TOL);
        let na = na.select_rows(rows.iter());
        let oa = DVector::from_iterator(rows.len(), rows.iter().map(|&i| offsets[active[i]]));
        let gram = &na * na.transpose();
        if let Some(mu) = solve_square(&gram, &(&na * p - oa), 1e-13) {
            let cand = p - na.transpose() * &mu;
            if mu.iter().all(|&v| v >= -1e-12) && feasible(&cand, 1e-12) && (&cand - &u).norm() < 1e-6 {
                return cand;
            }
        }
    }
    u
}

//! Small reference instances used by the examples, tests and data files.

use nalgebra::{DMatrix, DVector};

use crate::polytope::Polytope;
use crate::qp::ConcaveQp;

/// Concave QP on a box with `M = zz'` (so `B = z'`) and linear cost `c`, both
/// given in box coordinates and padded with zeros for slack columns.
pub fn box_rank_one(z: &[f64], c: &[f64], lower: &[f64], upper: &[f64]) -> ConcaveQp {
    let p = Polytope::box_to_standard(lower, upper).expect("valid box");
    let n = p.n();
    let mut b = DMatrix::zeros(1, n);
    let mut cc = DVector::zeros(n);
    for i in 0..z.len() {
        b[(0, i)] = z[i];
        cc[i] = c[i];
    }
    ConcaveQp::new(b, cc, p).expect("nontrivial instance")
}

/// `M = zz'`, `z = (-.5, -1, 1)`, `c = (-1, .5, -1)`, `K = [0,1]^3`.
/// Unique optimum at the vertex `(1, 0, 1)` with value `-2.125`.
pub fn fig1() -> ConcaveQp {
    box_rank_one(&[-0.5, -1.0, 1.0], &[-1.0, 0.5, -1.0], &[0.0; 3], &[1.0; 3])
}

/// `M = zz'`, `z = (.5, -1.5, -.5, .5)`, `c = (-1, .5, -1, .5)`, `K = [0,1]^4`.
pub fn fig3() -> ConcaveQp {
    box_rank_one(&[0.5, -1.5, -0.5, 0.5], &[-1.0, 0.5, -1.0, 0.5], &[0.0; 4], &[1.0; 4])
}

/// `min_{x in [1,2]} -x^2/2 + x`, encoded as `(x, s, r)` with `x + s = 2` and
/// `x - r = 1`. `B = (1, 0, 0)`, so `u` lives on the same axis as `x`.
pub fn example1() -> ConcaveQp {
    box_rank_one(&[1.0], &[1.0], &[1.0], &[2.0])
}

//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

/// Relative tolerance used for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Indices of a maximal linearly independent subset of the rows of `a`.
///
/// Greedy pivoted Gram-Schmidt: at each step the row with the largest residual
/// (after projecting out the rows already kept) is selected, until every
/// residual falls below `tol * max_row_norm`. Returned indices are sorted.
pub fn independent_rows(a: &DMatrix<f64>, tol: f64) -> Vec<usize> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Vec::new();
    }
    let scale = (0..m).map(|i| a.row(i).norm()).fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut residual: Vec<DVector<f64>> = (0..m).map(|i| a.row(i).transpose()).collect();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut used = vec![false; m];
    loop {
        let mut best = None;
        let mut best_norm = tol * scale;
        for i in 0..m {
            if used[i] {
                continue;
            }
            let nrm = residual[i].norm();
            if nrm > best_norm {
                best_norm = nrm;
                best = Some(i);
            }
        }
        let Some(pivot) = best else { break };
        used[pivot] = true;
        kept.push(pivot);
        let q = &residual[pivot] / best_norm;
        for i in 0..m {
            if !used[i] {
                let proj = q.dot(&residual[i]);
                residual[i].axpy(-proj, &q, 1.0);
            }
        }
        basis.push(q);
        if basis.len() == n {
            break;
        }
    }
    kept.sort_unstable();
    kept
}

/// Numerical rank of `a` with relative tolerance `tol`.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    independent_rows(a, tol).len()
}

/// Solves the square system `a x = rhs` by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot falls below `tol * max|a|`.
pub fn solve_square(a: &DMatrix<f64>, rhs: &DVector<f64>, tol: f64) -> Option<DVector<f64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let scale = a.amax();
    if n == 0 {
        return Some(DVector::zeros(0));
    }
    if scale == 0.0 {
        return None;
    }
    let mut m = a.clone();
    let mut r = rhs.clone();
    for col in 0..n {
        let (mut piv, mut best) = (col, m[(col, col)].abs());
        for row in col + 1..n {
            if m[(row, col)].abs() > best {
                best = m[(row, col)].abs();
                piv = row;
            }
        }
        if best <= tol * scale {
            return None;
        }
        if piv != col {
            m.swap_rows(piv, col);
            r.swap_rows(piv, col);
        }
        let d = m[(col, col)];
        for row in col + 1..n {
            let f = m[(row, col)] / d;
            if f != 0.0 {
                for k in col..n {
                    m[(row, k)] -= f * m[(col, k)];
                }
                r[row] -= f * r[col];
            }
        }
    }
    let mut x = DVector::zeros(n);
    for row in (0..n).rev() {
        let mut s = r[row];
        for k in row + 1..n {
            s -= m[(row, k)] * x[k];
        }
        x[row] = s / m[(row, row)];
    }
    Some(x)
}

/// Largest singular value.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |a, &s| a.max(s))
}

/// Shannon entropy `-sum x log x` with `0 log 0 = 0`. Negative entries give `-inf`.
pub fn entropy(x: &DVector<f64>) -> f64 {
    let mut h = 0.0;
    for &v in x.iter() {
        if v < 0.0 {
            return f64::NEG_INFINITY;
        }
        if v > 0.0 {
            h -= v * v.ln();
        }
    }
    h
}

/// `log(sum(exp(v)))` without overflow; `-inf` for an empty slice.
pub fn log_sum_exp<I: IntoIterator<Item = f64> + Clone>(values: I) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = values.into_iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// Euclidean projection of `x` onto the convex hull of `points`.
///
/// Exact for small hulls: every subset of the points is tried, the projection
/// onto its affine hull is computed and kept when its barycentric weights are
/// nonnegative. Returns the projected point.
pub fn project_onto_hull(x: &DVector<f64>, points: &[DVector<f64>]) -> DVector<f64> {
    assert!(!points.is_empty(), "hull of no points");
    if points.len() == 1 {
        return points[0].clone();
    }
    let k = points.len();
    assert!(k <= 20, "exact hull projection limited to 20 points");
    let mut best = points[0].clone();
    let mut best_d = (x - &points[0]).norm();
    for mask in 1u32..(1u32 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        if idx.len() == 1 {
            let d = (x - &points[idx[0]]).norm();
            if d < best_d {
                best_d = d;
                best = points[idx[0]].clone();
            }
            continue;
        }
        // p = p0 + D w, D columns p_j - p0; least squares D w = x - p0.
        let p0 = &points[idx[0]];
        let cols: Vec<DVector<f64>> = idx[1..].iter().map(|&j| &points[j] - p0).collect();
        let d = DMatrix::from_columns(&cols);
        let gram = d.transpose() * &d;
        let rhs = d.transpose() * (x - p0);
        let Some(w) = solve_square(&gram, &rhs, 1e-12) else { continue };
        if w.iter().any(|&v| v < -1e-12) || w.sum() > 1.0 + 1e-12 {
            continue;
        }
        let p = p0 + &d * &w;
        let dist = (x - &p).norm();
        if dist < best_d {
            best_d = dist;
            best = p;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_rows_drops_redundant_transport_row() {
        // 2x2 transport constraints: rank 3 of 4 rows.
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[1., 1., 0., 0., 0., 0., 1., 1., 1., 0., 1., 0., 0., 1., 0., 1.],
        );
        assert_eq!(independent_rows(&a, RANK_TOL).len(), 3);
    }

    #[test]
    fn solve_square_detects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1., 2., 2., 4.]);
        assert!(solve_square(&a, &DVector::from_vec(vec![1., 2.]), 1e-12).is_none());
        let a = DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        let x = solve_square(&a, &DVector::from_vec(vec![3., 4.]), 1e-12).unwrap();
        assert_eq!(x.as_slice(), &[4., 3.]);
    }

    #[test]
    fn entropy_of_uniform() {
        let x = DVector::from_element(4, 0.25);
        assert!((entropy(&x) - 4f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(&DVector::from_vec(vec![1.0, 0.0])), 0.0);
    }

    #[test]
    fn hull_projection_of_segment() {
        let pts = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![2.0, 0.0]),
        ];
        let p = project_onto_hull(&DVector::from_vec(vec![1.0, 3.0]), &pts);
        assert!((p - DVector::from_vec(vec![1.0, 0.0])).norm() < 1e-14);
        let p = project_onto_hull(&DVector::from_vec(vec![-1.0, 1.0]), &pts);
        assert!(p.norm() < 1e-14);
    }
}

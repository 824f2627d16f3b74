//! Standard-form polytopes `K = {x >= 0 : Ax = b}`, their vertices and the
//! geometric constants `R1`, `RH` used by the rate bounds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{entropy, independent_rows, solve_square, RANK_TOL};
use crate::lp::entropic::{solve_entropic_lp, EntropicOptions};
use crate::lp::simplex::simplex;

/// Absolute feasibility tolerance for `Ax = b` and `x >= 0`.
pub const FEAS_TOL: f64 = 1e-9;
/// Euclidean distance under which two vertices are considered equal.
pub const DEDUP_TOL: f64 = 1e-8;
/// Default cap on the number of variables for vertex enumeration.
pub const ENUM_LIMIT: usize = 24;

/// How box coordinates map into a standard-form vector.
///
/// The first `d` standard-form coordinates are the box point itself, the next
/// `d` are upper slacks `s = upper - x`, and every coordinate with a positive
/// lower bound gets one more surplus variable `r = x - lower`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxEmbedding {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Column index of the surplus variable, when the lower bound is positive.
    pub surplus: Vec<Option<usize>>,
}

impl BoxEmbedding {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn to_standard(&self, point: &[f64]) -> DVector<f64> {
        let d = self.dim();
        let n = 2 * d + self.surplus.iter().flatten().count();
        let mut x = DVector::zeros(n);
        for i in 0..d {
            x[i] = point[i];
            x[d + i] = self.upper[i] - point[i];
            if let Some(j) = self.surplus[i] {
                x[j] = point[i] - self.lower[i];
            }
        }
        x
    }

    pub fn to_box(&self, x: &DVector<f64>) -> Vec<f64> {
        x.iter().take(self.dim()).copied().collect()
    }
}

#[derive(Debug, Clone)]
pub struct Polytope {
    a: DMatrix<f64>,
    b: DVector<f64>,
    rows: Vec<usize>,
    a_red: DMatrix<f64>,
    b_red: DVector<f64>,
    witness: DVector<f64>,
    embedding: Option<BoxEmbedding>,
}

impl Polytope {
    /// Checks finiteness, nonemptiness and boundedness of `{x >= 0 : Ax = b}`.
    ///
    /// Boundedness is decided by maximizing every coordinate with the simplex
    /// method. The stored witness is the average of the `2n` coordinate-wise
    /// maximizers and minimizers.
    pub fn validate(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "A has {} rows but b has {} entries",
                a.nrows(),
                b.len()
            )));
        }
        if a.ncols() == 0 {
            return Err(Error::BadInput("polytope with no variables".into()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::BadInput("A and b must be finite".into()));
        }
        let n = a.ncols();
        let rows = independent_rows(&a, RANK_TOL);
        let a_red = a.select_rows(rows.iter());
        let b_red = b.select_rows(rows.iter());
        // Dropped rows must be implied by the kept ones; phase 1 on the reduced
        // system alone would not see an inconsistent duplicate.
        let mut witness = DVector::zeros(n);
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = -1.0;
            let hi = match simplex(&a_red, &b_red, &e) {
                Ok(s) => s,
                Err(Error::Unbounded(_)) => return Err(Error::Unbounded(i)),
                Err(e) => return Err(e),
            };
            e[i] = 1.0;
            let lo = simplex(&a_red, &b_red, &e)?;
            witness += hi.x + lo.x;
        }
        witness /= 2.0 * n as f64;
        let resid = (&a * &witness - &b).amax();
        if resid > FEAS_TOL * (1.0 + b.amax()) {
            return Err(Error::Infeasible);
        }
        Ok(Self { a, b, rows, a_red, b_red, witness, embedding: None })
    }

    /// Encodes the box `[lower, upper]` in standard form. See [`BoxEmbedding`].
    pub fn box_to_standard(lower: &[f64], upper: &[f64]) -> Result<Self> {
        let d = lower.len();
        if upper.len() != d || d == 0 {
            return Err(Error::BadInput("box bounds must be nonempty and of equal length".into()));
        }
        for i in 0..d {
            if !(lower[i] < upper[i]) || lower[i] < 0.0 || !upper[i].is_finite() {
                return Err(Error::BadInput(format!(
                    "need 0 <= lower < upper, got [{}, {}] in coordinate {i}",
                    lower[i], upper[i]
                )));
            }
        }
        let extra: Vec<usize> = (0..d).filter(|&i| lower[i] > 0.0).collect();
        let n = 2 * d + extra.len();
        let m = d + extra.len();
        let mut a = DMatrix::zeros(m, n);
        let mut b = DVector::zeros(m);
        let mut surplus = vec![None; d];
        for i in 0..d {
            a[(i, i)] = 1.0;
            a[(i, d + i)] = 1.0;
            b[i] = upper[i];
        }
        for (k, &i) in extra.iter().enumerate() {
            let col = 2 * d + k;
            a[(d + k, i)] = 1.0;
            a[(d + k, col)] = -1.0;
            b[d + k] = lower[i];
            surplus[i] = Some(col);
        }
        let mut p = Self::validate(a, b)?;
        p.embedding = Some(BoxEmbedding { lower: lower.to_vec(), upper: upper.to_vec(), surplus });
        Ok(p)
    }

    /// Transport polytope with the block layout `x[m * n1 + l] = pi(m, l)`:
    /// the first `n0` rows fix the `mu0` masses, the last `n1` rows the `mu1`
    /// masses.
    pub fn transport(mu0: &[f64], mu1: &[f64]) -> Result<Self> {
        let (n0, n1) = (mu0.len(), mu1.len());
        if n0 == 0 || n1 == 0 {
            return Err(Error::BadInput("empty marginal".into()));
        }
        let mut a = DMatrix::zeros(n0 + n1, n0 * n1);
        for m in 0..n0 {
            for l in 0..n1 {
                a[(m, m * n1 + l)] = 1.0;
                a[(n0 + l, m * n1 + l)] = 1.0;
            }
        }
        let b = DVector::from_iterator(n0 + n1, mu0.iter().chain(mu1.iter()).copied());
        Self::validate(a, b)
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Row-reduced system: linearly independent rows of `A`.
    pub fn reduced(&self) -> (&DMatrix<f64>, &DVector<f64>) {
        (&self.a_red, &self.b_red)
    }

    /// Indices of the rows kept by [`Polytope::reduced`].
    pub fn kept_rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn witness(&self) -> &DVector<f64> {
        &self.witness
    }

    pub fn embedding(&self) -> Option<&BoxEmbedding> {
        self.embedding.as_ref()
    }

    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        (&self.a * x - &self.b).amax()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.n() && x.iter().all(|&v| v >= -tol) && self.residual(x) <= tol
    }
}

#[derive(Debug, Clone)]
pub struct VertexSet {
    pub vertices: Vec<DVector<f64>>,
    pub dedup_tol: f64,
}

impl VertexSet {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DVector<f64>> {
        self.vertices.iter()
    }
}

/// All basic feasible solutions, with the default variable limit.
pub fn enumerate_vertices(p: &Polytope) -> Result<VertexSet> {
    enumerate_vertices_with_limit(p, ENUM_LIMIT)
}

/// Iterates over every column subset of size `rank(A)`, solves the square
/// system and keeps the nonnegative solutions.
pub fn enumerate_vertices_with_limit(p: &Polytope, limit: usize) -> Result<VertexSet> {
    let n = p.n();
    if n > limit {
        return Err(Error::TooLarge { n, limit });
    }
    let (a, b) = p.reduced();
    let r = a.nrows();
    let mut out: Vec<DVector<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        let sub = a.select_columns(idx.iter());
        if let Some(xb) = solve_square(&sub, b, 1e-12) {
            if xb.iter().all(|&v| v >= -FEAS_TOL) {
                let mut x = DVector::zeros(n);
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = xb[k].max(0.0);
                }
                if p.residual(&x) <= FEAS_TOL * (1.0 + p.b().amax())
                    && !out.iter().any(|v| (v - &x).norm() <= DEDUP_TOL)
                {
                    out.push(x);
                }
            }
        }
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    if out.is_empty() {
        return Err(Error::Infeasible);
    }
    Ok(VertexSet { vertices: out, dedup_tol: DEDUP_TOL })
}

/// Advances `idx` to the next `k`-subset of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone)]
pub struct PolytopeConstants {
    pub r1: f64,
    pub rh: f64,
    pub max_entropy_point: DVector<f64>,
}

/// `R1` from the vertices, the max-entropy point from the zero-cost entropic
/// LP, and `RH = H(max-entropy point) - min_v H(v)`.
pub fn constants(p: &Polytope, vs: &VertexSet) -> Result<PolytopeConstants> {
    let r1 = vs.iter().map(|v| v.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let sol = solve_entropic_lp(p, &DVector::zeros(p.n()), 1.0, &EntropicOptions::default())?;
    let hmax = entropy(&sol.x);
    let hmin = vs.iter().map(entropy).fold(f64::INFINITY, f64::min);
    Ok(PolytopeConstants { r1, rh: (hmax - hmin).max(0.0), max_entropy_point: sol.x })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex2() -> Polytope {
        Polytope::validate(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_vec(vec![1.0]))
            .unwrap()
    }

    #[test]
    fn simplex_witness_is_centroid() {
        let p = simplex2();
        assert!((p.witness() - DVector::from_vec(vec![0.5, 0.5])).amax() < 1e-15);
    }

    #[test]
    fn unbounded_ray_rejected() {
        let r = Polytope::validate(
            DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            DVector::from_vec(vec![0.0]),
        );
        assert!(matches!(r, Err(Error::Unbounded(_))));
    }

    #[test]
    fn infeasible_and_nonfinite_rejected() {
        let r = Polytope::validate(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_vec(vec![-1.0]),
        );
        assert!(matches!(r, Err(Error::Infeasible)));
        let r = Polytope::validate(
            DMatrix::from_row_slice(1, 2, &[f64::NAN, 1.0]),
            DVector::from_vec(vec![1.0]),
        );
        assert!(matches!(r, Err(Error::BadInput(_))));
    }

    #[test]
    fn unit_interval_box() {
        let p = Polytope::box_to_standard(&[0.0], &[1.0]).unwrap();
        assert_eq!(p.a(), &DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
        assert_eq!(p.b().as_slice(), &[1.0]);
        assert!(Polytope::box_to_standard(&[1.0], &[0.5]).is_err());
    }

    #[test]
    fn shifted_interval_embeds_both_ends() {
        let p = Polytope::box_to_standard(&[1.0], &[2.0]).unwrap();
        let emb = p.embedding().unwrap();
        for t in [1.0, 1.5, 2.0] {
            let x = emb.to_standard(&[t]);
            assert!(p.contains(&x, 1e-12));
            assert_eq!(emb.to_box(&x), vec![t]);
        }
        let vs = enumerate_vertices(&p).unwrap();
        let mut ends: Vec<f64> = vs.iter().map(|v| v[0]).collect();
        ends.sort_by(f64::total_cmp);
        assert_eq!(ends, vec![1.0, 2.0]);
    }

    #[test]
    fn cube_has_eight_vertices() {
        let p = Polytope::box_to_standard(&[0.0; 3], &[1.0; 3]).unwrap();
        assert_eq!((p.n(), p.m()), (6, 3));
        let vs = enumerate_vertices(&p).unwrap();
        assert_eq!(vs.len(), 8);
        for v in vs.iter() {
            assert!(v.iter().all(|&x| x == 0.0 || x == 1.0));
        }
    }

    #[test]
    fn transport_rank_and_vertices() {
        let w = [1.0 / 3.0; 3];
        let p = Polytope::transport(&w, &w).unwrap();
        assert_eq!(p.rank(), 5);
        let vs = enumerate_vertices(&p).unwrap();
        assert_eq!(vs.len(), 6);
        for v in vs.iter() {
            // a scaled permutation: three entries of 1/3, one per row and column
            assert_eq!(v.iter().filter(|&&x| (x - 1.0 / 3.0).abs() < 1e-12).count(), 3);
        }
    }

    #[test]
    fn too_large_reported() {
        let p = Polytope::box_to_standard(&[0.0; 3], &[1.0; 3]).unwrap();
        assert!(matches!(
            enumerate_vertices_with_limit(&p, 5),
            Err(Error::TooLarge { n: 6, limit: 5 })
        ));
    }

    #[test]
    fn constants_of_small_polytopes() {
        let p = simplex2();
        let vs = enumerate_vertices(&p).unwrap();
        let k = constants(&p, &vs).unwrap();
        assert!((k.r1 - 1.0).abs() < 1e-12);
        assert!((k.rh - 2f64.ln()).abs() < 1e-9);

        let w = [1.0 / 3.0; 3];
        let p = Polytope::transport(&w, &w).unwrap();
        let vs = enumerate_vertices(&p).unwrap();
        let k = constants(&p, &vs).unwrap();
        assert!((k.rh - 3f64.ln()).abs() < 1e-9);

        let p = Polytope::box_to_standard(&[0.0; 3], &[1.0; 3]).unwrap();
        let vs = enumerate_vertices(&p).unwrap();
        assert_eq!(constants(&p, &vs).unwrap().r1, 3.0);
    }

    #[test]
    fn combinations_cover_all_subsets() {
        let mut idx = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut idx, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
    }
}

//! Concave QP `min_K -1/2 x'Mx + c'x` with `M = B'B`, its variational
//! objective `g_eps`, cell geometry and the approximation-gap constants.

pub mod cells;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::op_norm;
use crate::lp::{kappa, solve_entropic_lp, solve_lp, EntropicOptions};
use crate::polytope::{enumerate_vertices, Polytope, PolytopeConstants, VertexSet, ENUM_LIMIT};

pub use cells::{CellGeometry, CELL_TOL};

#[derive(Debug, Clone)]
pub struct ConcaveQp {
    b: DMatrix<f64>,
    c: DVector<f64>,
    polytope: Polytope,
    vertices: Option<VertexSet>,
}

impl ConcaveQp {
    /// Builds the QP and enforces nontriviality: two vertices must differ in
    /// objective by more than `1e-12`. Vertices are enumerated eagerly when
    /// the polytope has at most [`ENUM_LIMIT`] variables.
    pub fn new(b: DMatrix<f64>, c: DVector<f64>, polytope: Polytope) -> Result<Self> {
        let qp = Self::new_allow_trivial(b, c, polytope)?;
        if let Some(vs) = &qp.vertices {
            let vals: Vec<f64> = vs.iter().map(|v| qp.objective(v)).collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo <= 1e-12 {
                return Err(Error::DegenerateInstance(
                    "objective is constant on the vertices".into(),
                ));
            }
        }
        Ok(qp)
    }

    /// Same as [`ConcaveQp::new`] without the nontriviality check. Used for
    /// compiled problems (single-coupling transport polytopes) that are
    /// legitimately constant.
    pub fn new_allow_trivial(b: DMatrix<f64>, c: DVector<f64>, polytope: Polytope) -> Result<Self> {
        let n = polytope.n();
        if b.ncols() != n || c.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "B is {}x{}, c has {}, polytope has {n} variables",
                b.nrows(),
                b.ncols(),
                c.len()
            )));
        }
        if b.nrows() > n {
            return Err(Error::DimensionMismatch(format!("B has {} rows > n = {n}", b.nrows())));
        }
        if b.iter().chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::BadInput("B and c must be finite".into()));
        }
        let vertices = if n <= ENUM_LIMIT { Some(enumerate_vertices(&polytope)?) } else { None };
        Ok(Self { b, c, polytope, vertices })
    }

    /// Factorizes `M` with [`factorize_psd`] and builds the QP.
    pub fn from_m(m: &DMatrix<f64>, c: DVector<f64>, polytope: Polytope, tol: f64) -> Result<Self> {
        Self::new(factorize_psd(m, tol)?, c, polytope)
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn m(&self) -> DMatrix<f64> {
        self.b.tr_mul(&self.b)
    }

    pub fn r(&self) -> usize {
        self.b.nrows()
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    pub fn vertices(&self) -> Result<&VertexSet> {
        self.vertices.as_ref().ok_or(Error::TooLarge { n: self.n(), limit: ENUM_LIMIT })
    }

    /// `-1/2 |Bx|^2 + c'x`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        -0.5 * (&self.b * x).norm_squared() + self.c.dot(x)
    }

    /// Linear cost `c - B'u` of the inner LP.
    pub fn linear_cost(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.c - self.b.tr_mul(u)
    }

    fn check_u(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.r() {
            return Err(Error::DimensionMismatch(format!(
                "u has {} entries, B has {} rows",
                u.len(),
                self.r()
            )));
        }
        Ok(())
    }
}

/// `B` with `B'B = M` from the eigen-decomposition of `M`; rows are
/// `sqrt(lambda_k) p_k'` for eigenvalues above `tol * |M|`, largest first.
/// Each row is signed so that its largest-magnitude entry is positive.
pub fn factorize_psd(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("M must be square".into()));
    }
    let n = m.nrows();
    let asym = (m - m.transpose()).amax();
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if asym > 1e-12 * scale {
        return Err(Error::BadInput(format!("M is not symmetric (asymmetry {asym:e})")));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let norm = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min = eig.eigenvalues.min();
    if min < -tol * norm {
        return Err(Error::NotPsd { eigenvalue: min, threshold: -tol * norm });
    }
    let mut order: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > tol * norm).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let mut b = DMatrix::zeros(order.len(), n);
    for (row, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = v.iter().copied().fold(0.0_f64, |a, x| if x.abs() > a.abs() { x } else { a });
        let s = eig.eigenvalues[k].sqrt() * pivot.signum();
        for j in 0..n {
            b[(row, j)] = s * v[j];
        }
    }
    Ok(b)
}

/// Value, gradient and inner minimizer of `g_eps` at one point.
#[derive(Debug, Clone)]
pub struct GEval {
    pub value: f64,
    /// `u - Bx`; for `eps = 0` this is one element of the Clarke subdifferential.
    pub grad: DVector<f64>,
    pub x: DVector<f64>,
    /// Dual potentials of the inner entropic LP, usable as a warm start.
    pub dual: Option<DVector<f64>>,
    pub iterations: usize,
}

/// Evaluates `g_eps(u) = 1/2 |u|^2 + min_K (c - B'u)'x - eps H(x)`.
/// `eps = 0` uses the simplex method, `eps > 0` the entropic solver, whose
/// dual objective supplies the inner value.
pub fn g_eval(qp: &ConcaveQp, epsilon: f64, u: &DVector<f64>) -> Result<GEval> {
    g_eval_with(qp, epsilon, u, &EntropicOptions::default())
}

pub fn g_eval_with(
    qp: &ConcaveQp,
    epsilon: f64,
    u: &DVector<f64>,
    opts: &EntropicOptions,
) -> Result<GEval> {
    qp.check_u(u)?;
    let cost = qp.linear_cost(u);
    let (inner, x, dual, iterations) = if epsilon == 0.0 {
        let s = solve_lp(qp.polytope(), &cost)?;
        (s.value, s.x, None, 0)
    } else {
        let s = solve_entropic_lp(qp.polytope(), &cost, epsilon, opts)?;
        (s.dual_value, s.x, Some(s.y), s.iterations)
    };
    let grad = u - qp.b() * &x;
    Ok(GEval { value: 0.5 * u.norm_squared() + inner, grad, x, dual, iterations })
}

pub fn g_eps(qp: &ConcaveQp, epsilon: f64, u: &DVector<f64>) -> Result<f64> {
    if epsilon < 0.0 {
        return Err(Error::EpsilonNonpositive(epsilon));
    }
    Ok(g_eval(qp, epsilon, u)?.value)
}

/// `u - B x_{u,eps}`; requires `eps > 0`.
pub fn grad_g_eps(qp: &ConcaveQp, epsilon: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::EpsilonNonpositive(epsilon));
    }
    Ok(g_eval(qp, epsilon, u)?.grad)
}

fn vertex_costs(qp: &ConcaveQp, vs: &VertexSet, u: &DVector<f64>) -> Vec<f64> {
    let cost = qp.linear_cost(u);
    vs.iter().map(|v| cost.dot(v)).collect()
}

/// Every cell containing `u`: vertices optimal for `c - B'u` within `tol`.
pub fn cell_membership(qp: &ConcaveQp, vs: &VertexSet, u: &DVector<f64>, tol: f64) -> Vec<usize> {
    let vals = vertex_costs(qp, vs, u);
    let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    (0..vals.len()).filter(|&i| vals[i] <= best + tol).collect()
}

/// Generators `u - Bv` (deduplicated) of the Clarke subdifferential of `g_0`.
pub fn clarke_subdiff_g0(qp: &ConcaveQp, vs: &VertexSet, u: &DVector<f64>, tol: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for i in cell_membership(qp, vs, u, tol) {
        let g = u - qp.b() * &vs.vertices[i];
        if !out.iter().any(|h| (h - &g).norm() <= 1e-12) {
            out.push(g);
        }
    }
    out
}

/// Reference answer by brute force: optimal vertex indices and the value.
pub fn solve_qp_by_enumeration(qp: &ConcaveQp, vs: &VertexSet) -> (Vec<usize>, f64) {
    let vals: Vec<f64> = vs.iter().map(|v| qp.objective(v)).collect();
    let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * (1.0 + best.abs());
    ((0..vals.len()).filter(|&i| vals[i] <= best + tol).collect(), best)
}

#[derive(Debug, Clone)]
pub struct RateConstants {
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon_max: f64,
    /// Indices of cells meeting the minimizer set of `g_0`.
    pub optimal_cells: Vec<usize>,
    pub gamma_i: Vec<f64>,
    pub delta_i: Vec<f64>,
    pub g0_min: f64,
}

/// `alpha`, `gamma_i`, `Delta_i` and the admissible threshold
/// `min{alpha/RH, gamma^2/(8 RH), Delta/(R1 + RH)}`.
pub fn rate_constants(
    qp: &ConcaveQp,
    vs: &VertexSet,
    pc: &PolytopeConstants,
) -> Result<RateConstants> {
    let (opt, g0_min) = solve_qp_by_enumeration(qp, vs);
    let bv: Vec<DVector<f64>> = vs.iter().map(|v| qp.b() * v).collect();
    let mut star: Vec<usize> = Vec::new();
    for &k in &opt {
        for i in cell_membership(qp, vs, &bv[k], CELL_TOL) {
            if !star.contains(&i) {
                star.push(i);
            }
        }
    }
    star.sort_unstable();
    if star.is_empty() {
        return Err(Error::DegenerateInstance("no optimal cell".into()));
    }
    let mut gamma_i = Vec::with_capacity(star.len());
    let mut delta_i = Vec::with_capacity(star.len());
    for &i in &star {
        let cell = CellGeometry::new(qp, vs, i);
        if !cell.contains(&bv[i], CELL_TOL) {
            return Err(Error::DegenerateInstance(format!("B v_{i} lies outside its optimal cell")));
        }
        let g = cell.boundary_distance(&bv[i]);
        if !(g > CELL_TOL) {
            return Err(Error::DegenerateInstance(format!("gamma_{i} = {g:e} is not positive")));
        }
        let sep = bv
            .iter()
            .map(|b| (b - &bv[i]).norm())
            .filter(|&d| d > 1e-12)
            .fold(f64::INFINITY, f64::min);
        let kap = kappa(vs, &qp.linear_cost(&bv[i])).kappa;
        gamma_i.push(g);
        delta_i.push(kap.min(0.5 * g * sep));
    }
    let mut alpha_min = f64::INFINITY;
    for i in (0..vs.len()).filter(|i| !star.contains(i)) {
        let cell = CellGeometry::new(qp, vs, i);
        if let Some(u) = cell.project(&bv[i]) {
            let val = 0.5 * u.norm_squared() + qp.linear_cost(&u).dot(&vs.vertices[i]);
            alpha_min = alpha_min.min(val);
        }
    }
    let alpha = alpha_min - g0_min;
    if !(alpha > 1e-12) {
        return Err(Error::DegenerateInstance(format!("alpha = {alpha:e} is not positive")));
    }
    let gamma = gamma_i.iter().copied().fold(f64::INFINITY, f64::min);
    let delta = delta_i.iter().copied().fold(f64::INFINITY, f64::min);
    let (r1, rh) = (pc.r1, pc.rh);
    let epsilon_max = (alpha / rh).min(gamma * gamma / (8.0 * rh)).min(delta / (r1 + rh));
    Ok(RateConstants { alpha, gamma, delta, epsilon_max, optimal_cells: star, gamma_i, delta_i, g0_min })
}

/// Gradient-gap constant `K_i(gamma)`: the smaller of
/// `gamma * min |Bv_k - Bv_i|` over `Bv_k != Bv_i` and
/// `min c'(v_k - v_i)` over `Bv_k = Bv_i` with `c'v_k != c'v_i`.
pub fn near_critical_k(qp: &ConcaveQp, vs: &VertexSet, i: usize, gamma: f64) -> f64 {
    let bvi = qp.b() * &vs.vertices[i];
    let cvi = qp.c().dot(&vs.vertices[i]);
    let mut sep = f64::INFINITY;
    let mut lin = f64::INFINITY;
    for v in vs.iter() {
        let d = (qp.b() * v - &bvi).norm();
        if d > 1e-12 {
            sep = sep.min(d);
        } else {
            let dc = qp.c().dot(v) - cvi;
            if dc.abs() > 1e-12 {
                lin = lin.min(dc);
            }
        }
    }
    (gamma * sep).min(lin)
}

/// Largest epsilon admitted by the near-critical-point classification:
/// `K / (R1 + RH - R1 log(delta / (4 |B|_op R1)))`.
pub fn near_critical_epsilon(k: f64, r1: f64, rh: f64, delta: f64, b_op: f64) -> f64 {
    k / (r1 + rh - r1 * (delta / (4.0 * b_op * r1)).ln())
}

/// `|B|_op`, the largest singular value of `B`.
pub fn b_op_norm(qp: &ConcaveQp) -> f64 {
    op_norm(qp.b())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::polytope::constants;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn factorize_identity_and_rank_one() {
        let b = factorize_psd(&DMatrix::identity(2, 2), 1e-12).unwrap();
        assert!((b.tr_mul(&b) - DMatrix::identity(2, 2)).amax() < 1e-14);
        let z = dv(&[-0.5, -1.0, 1.0]);
        let m = &z * z.transpose();
        let b = factorize_psd(&m, 1e-12).unwrap();
        assert_eq!(b.nrows(), 1);
        let row = b.row(0).transpose();
        assert!((&row - &z).amax() < 1e-14 || (&row + &z).amax() < 1e-14);
    }

    #[test]
    fn factorize_clips_tiny_and_rejects_negative() {
        let m = DMatrix::from_diagonal(&dv(&[1.0, 1e-14]));
        assert_eq!(factorize_psd(&m, 1e-12).unwrap().nrows(), 1);
        let m = DMatrix::from_diagonal(&dv(&[1.0, -0.1]));
        assert!(matches!(factorize_psd(&m, 1e-12), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn g0_on_example1() {
        let qp = instances::example1();
        assert!((g_eps(&qp, 0.0, &dv(&[1.0])).unwrap() - 0.5).abs() < 1e-14);
        assert!(g_eps(&qp, 0.0, &dv(&[2.0])).unwrap().abs() < 1e-14);
    }

    #[test]
    fn g0_on_fig1_matches_brute_force_optimum() {
        let qp = instances::fig1();
        assert!((g_eps(&qp, 0.0, &dv(&[0.5])).unwrap() + 2.125).abs() < 1e-14);
        let vs = qp.vertices().unwrap();
        let (opt, val) = solve_qp_by_enumeration(&qp, vs);
        assert_eq!(opt.len(), 1);
        assert_eq!(&vs.vertices[opt[0]].as_slice()[..3], &[1.0, 0.0, 1.0]);
        assert_eq!(val, -2.125);
    }

    #[test]
    fn cells_on_example1() {
        let qp = instances::example1();
        let vs = qp.vertices().unwrap();
        let at0 = cell_membership(&qp, vs, &dv(&[0.0]), CELL_TOL);
        assert_eq!(at0.len(), 1);
        assert_eq!(vs.vertices[at0[0]][0], 1.0);
        assert_eq!(cell_membership(&qp, vs, &dv(&[1.0]), CELL_TOL).len(), 2);
        let gens = clarke_subdiff_g0(&qp, vs, &dv(&[1.0]), CELL_TOL);
        let mut g: Vec<f64> = gens.iter().map(|v| v[0]).collect();
        g.sort_by(f64::total_cmp);
        assert_eq!(g, vec![-1.0, 0.0]);
    }

    #[test]
    fn example1_constants() {
        let qp = instances::example1();
        let vs = qp.vertices().unwrap();
        let pc = constants(qp.polytope(), vs).unwrap();
        let k = rate_constants(&qp, vs, &pc).unwrap();
        assert_eq!(k.optimal_cells.len(), 1);
        assert_eq!(vs.vertices[k.optimal_cells[0]][0], 2.0);
        assert!((k.gamma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trivial_objective_rejected() {
        let p = Polytope::box_to_standard(&[0.0], &[1.0]).unwrap();
        let r = ConcaveQp::new(DMatrix::zeros(1, 2), DVector::zeros(2), p);
        assert!(matches!(r, Err(Error::DegenerateInstance(_))));
    }
}

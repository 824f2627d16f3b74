//! Discrete Gromov-Wasserstein problems with `p = 2` compiled into concave
//! QPs over the transport polytope.
//!
//! Couplings are flattened as `x = vec(P)` with `P` of shape `N1 x N0`, so
//! the mass on the pair `(m, l)` sits at `x[m * N1 + l]` (zero-based).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::certify::{certify, CertificateOutcome};
use crate::descent::{anneal, DescentResult};
use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::qp::{factorize_psd, solve_qp_by_enumeration, ConcaveQp};
use crate::rates::{global_solve, SolverConfig};

const SYM_TOL: f64 = 1e-12;
const PROB_TOL: f64 = 1e-12;
const CENTER_TOL: f64 = 1e-10;
/// Relative tolerance for kernel and assembled-form definiteness.
pub const SIGN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMmSpace {
    kernel: DMatrix<f64>,
    weights: Vec<f64>,
}

impl DiscreteMmSpace {
    pub fn new(kernel: DMatrix<f64>, weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        if kernel.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "kernel is {}x{}, {n} weights",
                kernel.nrows(),
                kernel.ncols()
            )));
        }
        if kernel.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadInput("kernel entries must be finite".into()));
        }
        let asym = (&kernel - kernel.transpose()).amax();
        if asym > SYM_TOL {
            return Err(Error::BadInput(format!("kernel is not symmetric (asymmetry {asym:e})")));
        }
        check_weights(&weights)?;
        Ok(Self { kernel, weights })
    }

    pub fn size(&self) -> usize {
        self.weights.len()
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.is_empty() || w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::NonProbability("weights must be positive".into()));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > PROB_TOL {
        return Err(Error::NonProbability(format!("weights sum to {s}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelSignature {
    Psd,
    Nsd,
    Neither,
}

/// Sign class from the extreme eigenvalues, with tolerance `tol * |k|`.
pub fn kernel_signature(k: &DMatrix<f64>, tol: f64) -> KernelSignature {
    let eig = SymmetricEigen::new((k + k.transpose()) * 0.5).eigenvalues;
    let norm = eig.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let thr = tol * norm;
    if eig.min() >= -thr {
        KernelSignature::Psd
    } else if eig.max() <= thr {
        KernelSignature::Nsd
    } else {
        KernelSignature::Neither
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GwKind {
    /// Kronecker form of the kernel QP with `c = 0`.
    Kernel,
    /// Euclidean `(2, 2)` form with a linear term and `B` built from
    /// coordinate products.
    Euclidean22,
}

#[derive(Debug, Clone)]
pub struct GwProblem {
    pub qp: ConcaveQp,
    /// Coupling-independent part of the GW cost.
    pub constant: f64,
    pub n0: usize,
    pub n1: usize,
    pub q: f64,
    pub kind: GwKind,
    k0q: DMatrix<f64>,
    k1q: DMatrix<f64>,
}

impl GwProblem {
    /// Flat index of the pair `(m, l)`.
    pub fn index(&self, m: usize, l: usize) -> usize {
        m * self.n1 + l
    }

    /// `sum (k0^q(m,m') - k1^q(l,l'))^2 x[m,l] x[m',l']` by the double sum.
    pub fn direct_cost(&self, x: &DVector<f64>) -> f64 {
        let mut total = 0.0;
        for m in 0..self.n0 {
            for l in 0..self.n1 {
                let a = x[self.index(m, l)];
                if a == 0.0 {
                    continue;
                }
                for mp in 0..self.n0 {
                    for lp in 0..self.n1 {
                        let d = self.k0q[(m, mp)] - self.k1q[(l, lp)];
                        total += d * d * a * x[self.index(mp, lp)];
                    }
                }
            }
        }
        total
    }

    /// `constant + objective(x)`; equals [`GwProblem::direct_cost`] on couplings.
    pub fn quadratic_cost(&self, x: &DVector<f64>) -> f64 {
        self.constant + self.qp.objective(x)
    }

    /// The uncompiled quadratic form `4 K0^q (x) K1^q`.
    pub fn direct_m(&self) -> DMatrix<f64> {
        self.k0q.kronecker(&self.k1q) * 4.0
    }
}

fn hadamard_power(k: &DMatrix<f64>, q: f64) -> Result<DMatrix<f64>> {
    if q.fract() == 0.0 {
        return Ok(k.map(|v| v.powi(q as i32)));
    }
    if k.iter().any(|&v| v < 0.0) {
        return Err(Error::BadInput(format!("non-integer q = {q} needs a nonnegative kernel")));
    }
    Ok(k.map(|v| v.powf(q)))
}

fn weighted_sum(k: &DMatrix<f64>, w: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..w.len() {
        for j in 0..w.len() {
            s += k[(i, j)] * w[i] * w[j];
        }
    }
    s
}

/// Compiles two kernel spaces into `constant + min -1/2 x'Mx` with
/// `M = 4 K0^q (x) K1^q` over the transport polytope of the weights.
///
/// Integer `q` follows the Schur-product argument. Non-integer `q` is
/// accepted after re-checking the signs of the powered kernels.
pub fn assemble(space0: &DiscreteMmSpace, space1: &DiscreteMmSpace, q: f64) -> Result<GwProblem> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::BadInput(format!("q must be positive, got {q}")));
    }
    let (s0, s1) = if q.fract() == 0.0 {
        (kernel_signature(&space0.kernel, SIGN_TOL), kernel_signature(&space1.kernel, SIGN_TOL))
    } else {
        log::warn!("non-integer q = {q}: checking the powered kernels directly");
        (
            kernel_signature(&hadamard_power(&space0.kernel, q)?, SIGN_TOL),
            kernel_signature(&hadamard_power(&space1.kernel, q)?, SIGN_TOL),
        )
    };
    let same = matches!(
        (s0, s1),
        (KernelSignature::Psd, KernelSignature::Psd) | (KernelSignature::Nsd, KernelSignature::Nsd)
    );
    if !same {
        return Err(Error::KernelSignMismatch(format!("space0 is {s0:?}, space1 is {s1:?}")));
    }
    let k0q = hadamard_power(&space0.kernel, q)?;
    let k1q = hadamard_power(&space1.kernel, q)?;
    let m = k0q.kronecker(&k1q) * 4.0;
    let b = match factorize_psd(&m, SIGN_TOL) {
        Ok(b) => b,
        Err(Error::NotPsd { eigenvalue, .. }) => return Err(Error::NotPsdAfterSchur(eigenvalue)),
        Err(e) => return Err(e),
    };
    let constant = weighted_sum(&k0q.map(|v| v * v), &space0.weights)
        + weighted_sum(&k1q.map(|v| v * v), &space1.weights);
    let polytope = Polytope::transport(&space0.weights, &space1.weights)?;
    let n = polytope.n();
    let qp = ConcaveQp::new_allow_trivial(b, DVector::zeros(n), polytope)?;
    Ok(GwProblem { qp, constant, n0: space0.size(), n1: space1.size(), q, kind: GwKind::Kernel, k0q, k1q })
}

fn squared_distances(points: &[DVector<f64>]) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| (&points[i] - &points[j]).norm_squared())
}

fn check_cloud(which: usize, points: &[DVector<f64>], w: &[f64]) -> Result<usize> {
    if points.is_empty() || points.len() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "cloud {which} has {} points and {} weights",
            points.len(),
            w.len()
        )));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::DimensionMismatch(format!("cloud {which} mixes dimensions")));
    }
    check_weights(w)?;
    let mean = points.iter().zip(w).fold(DVector::zeros(d), |acc, (p, &wi)| acc + p * wi);
    let mean_norm = mean.norm();
    if mean_norm > CENTER_TOL {
        return Err(Error::Uncentered { which, mean_norm });
    }
    Ok(d)
}

/// Euclidean `(2, 2)` problem between centered clouds. The indefinite form
/// `-1/2 x'Mx` with `M = 4 D0 (x) D1` (squared distances) is replaced by the
/// concave `-1/2 |Bx|^2 + c'x + C`, with `c[m,l] = -4 |x_m|^2 |y_l|^2`, rows
/// `4 z_ij` of `B` where `z_ij[m,l] = (x_m)_i (y_l)_j`, and
/// `C = -4 E|x|^2 E|y|^2`.
///
/// The identity is checked on 20 seeded random couplings before returning.
pub fn euclidean_quadratic_assemble(
    points0: &[DVector<f64>],
    points1: &[DVector<f64>],
    weights0: &[f64],
    weights1: &[f64],
) -> Result<GwProblem> {
    let d0 = check_cloud(0, points0, weights0)?;
    let d1 = check_cloud(1, points1, weights1)?;
    let (n0, n1) = (points0.len(), points1.len());
    let a: Vec<f64> = points0.iter().map(|p| p.norm_squared()).collect();
    let bb: Vec<f64> = points1.iter().map(|p| p.norm_squared()).collect();
    let c = DVector::from_fn(n0 * n1, |k, _| -4.0 * a[k / n1] * bb[k % n1]);
    let b = DMatrix::from_fn(d0 * d1, n0 * n1, |row, k| {
        let (i, j) = (row / d1, row % d1);
        4.0 * points0[k / n1][i] * points1[k % n1][j]
    });
    let ea: f64 = a.iter().zip(weights0).map(|(v, w)| v * w).sum();
    let eb: f64 = bb.iter().zip(weights1).map(|(v, w)| v * w).sum();
    let k0q = squared_distances(points0);
    let k1q = squared_distances(points1);
    let constant = weighted_sum(&k0q.map(|v| v * v), weights0)
        + weighted_sum(&k1q.map(|v| v * v), weights1)
        - 4.0 * ea * eb;
    let polytope = Polytope::transport(weights0, weights1)?;
    let qp = ConcaveQp::new_allow_trivial(b, c, polytope)?;
    let problem = GwProblem { qp, constant, n0, n1, q: 2.0, kind: GwKind::Euclidean22, k0q, k1q };
    verify_euclidean_identity(&problem, weights0, weights1, 20, 0)?;
    Ok(problem)
}

/// North-west corner vertex of the transport polytope with rows and
/// columns visited in the given orders.
fn northwest_corner(mu0: &[f64], mu1: &[f64], rows: &[usize], cols: &[usize]) -> DVector<f64> {
    let n1 = mu1.len();
    let mut x = DVector::zeros(mu0.len() * n1);
    let (mut r, mut c) = (mu0.to_vec(), mu1.to_vec());
    let (mut i, mut j) = (0, 0);
    while i < rows.len() && j < cols.len() {
        let (m, l) = (rows[i], cols[j]);
        let t = r[m].min(c[l]);
        x[m * n1 + l] = t;
        r[m] -= t;
        c[l] -= t;
        if i + 1 == rows.len() {
            j += 1;
        } else if j + 1 == cols.len() || r[m] <= c[l] {
            i += 1;
        } else {
            j += 1;
        }
    }
    x
}

/// Random couplings, each a random convex combination of north-west corner
/// vertices under shuffled orders. Marginals hold to rounding.
pub fn random_couplings(mu0: &[f64], mu1: &[f64], count: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    check_weights(mu0)?;
    check_weights(mu1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = (0..mu0.len()).collect();
    let mut cols: Vec<usize> = (0..mu1.len()).collect();
    let k = mu0.len() + mu1.len();
    Ok((0..count)
        .map(|_| {
            let mut x = DVector::zeros(mu0.len() * mu1.len());
            let lambdas: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = lambdas.iter().sum();
            for lam in lambdas {
                rows.shuffle(&mut rng);
                cols.shuffle(&mut rng);
                x += northwest_corner(mu0, mu1, &rows, &cols) * (lam / total);
            }
            x
        })
        .collect())
}

fn verify_euclidean_identity(p: &GwProblem, w0: &[f64], w1: &[f64], count: usize, seed: u64) -> Result<()> {
    let m = p.direct_m();
    let c_const = p.constant
        - weighted_sum(&p.k0q.map(|v| v * v), w0)
        - weighted_sum(&p.k1q.map(|v| v * v), w1);
    for x in random_couplings(w0, w1, count, seed)? {
        let lhs = -0.5 * x.dot(&(&m * &x));
        let rhs = p.qp.objective(&x) + c_const;
        let scale = 1.0 + lhs.abs() + c_const.abs();
        if (lhs - rhs).abs() > 1e-10 * scale {
            return Err(Error::NumericalFailure(format!(
                "quadratic decomposition off by {:e}",
                (lhs - rhs).abs()
            )));
        }
    }
    Ok(())
}

/// Coupling matrix `P` (`N1 x N0`) with `P[l, m]` the mass on `(m, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub matrix: DMatrix<f64>,
}

impl Coupling {
    pub fn from_flat(x: &DVector<f64>, n0: usize, n1: usize) -> Self {
        Self { matrix: DMatrix::from_fn(n1, n0, |l, m| x[m * n1 + l]) }
    }

    pub fn flat(&self) -> DVector<f64> {
        let (n1, n0) = self.matrix.shape();
        DVector::from_fn(n0 * n1, |k, _| self.matrix[(k % n1, k / n1)])
    }

    /// Largest marginal violation: columns against `mu0`, rows against `mu1`.
    pub fn marginal_residual(&self, mu0: &[f64], mu1: &[f64]) -> f64 {
        let cols = (0..mu0.len()).map(|m| (self.matrix.column(m).sum() - mu0[m]).abs());
        let rows = (0..mu1.len()).map(|l| (self.matrix.row(l).sum() - mu1[l]).abs());
        cols.chain(rows).fold(0.0, f64::max)
    }
}

fn solve(problem: &GwProblem, epsilon: f64, cfg: &SolverConfig) -> Result<DescentResult> {
    let qp = &problem.qp;
    match qp.vertices() {
        Ok(vs) => global_solve(qp, vs, epsilon, cfg),
        Err(_) => {
            let delta = match cfg.delta {
                Some(d) => d,
                None => crate::descent::default_delta(qp)?,
            };
            let schedule: Vec<f64> = (0..=cfg.anneal_stages)
                .rev()
                .map(|k| epsilon * cfg.anneal_factor.powi(k as i32))
                .collect();
            anneal(qp, &schedule, delta, cfg.max_iter)
        }
    }
}

/// `constant + min g_eps`. At `eps = 0` the minimum comes from vertex
/// enumeration, otherwise from the multi-start solve of the rate module.
pub fn egw_value(problem: &GwProblem, epsilon: f64, cfg: &SolverConfig) -> Result<f64> {
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(Error::EpsilonNonpositive(epsilon));
    }
    if epsilon == 0.0 {
        let vs = problem.qp.vertices()?;
        return Ok(problem.constant + solve_qp_by_enumeration(&problem.qp, vs).1);
    }
    Ok(problem.constant + solve(problem, epsilon, cfg)?.g_value)
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub coupling: Coupling,
    pub certificate: CertificateOutcome,
    pub descent: DescentResult,
    /// GW cost of the recovered coupling.
    pub cost: f64,
}

/// Solves the regularized problem, recovers the coupling and certifies the
/// resulting point with probe radius 1.
pub fn gw_align(problem: &GwProblem, epsilon: f64, delta: Option<f64>, seed: u64) -> Result<Alignment> {
    if !(epsilon > 0.0) {
        return Err(Error::EpsilonNonpositive(epsilon));
    }
    let cfg = SolverConfig { delta, ..Default::default() };
    let r = solve(problem, epsilon, &cfg)?;
    let certificate = certify(&problem.qp, &r.u, 1.0, seed, 1e-9)?;
    let coupling = Coupling::from_flat(&r.x, problem.n0, problem.n1);
    let cost = problem.quadratic_cost(&r.x);
    Ok(Alignment { coupling, certificate, descent: r, cost })
}

/// Gaussian kernel `exp(-|x - x'|^2 / s2)`, which is PSD.
pub fn gaussian_kernel(points: &[DVector<f64>], s2: f64) -> DMatrix<f64> {
    squared_distances(points).map(|d| (-d / s2).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    fn triangle() -> DiscreteMmSpace {
        let pts = [dv(&[0.0, 0.0]), dv(&[1.0, 0.0]), dv(&[0.0, 2.0])];
        DiscreteMmSpace::new(gaussian_kernel(&pts, 4.0), vec![1.0 / 3.0; 3]).unwrap()
    }

    #[test]
    fn signatures() {
        let pts = [dv(&[1.0, 0.0]), dv(&[0.3, 2.0]), dv(&[-1.0, 0.5])];
        let gram = DMatrix::from_fn(3, 3, |i, j| pts[i].dot(&pts[j]));
        assert_eq!(kernel_signature(&gram, SIGN_TOL), KernelSignature::Psd);
        assert_eq!(kernel_signature(&-gram, SIGN_TOL), KernelSignature::Nsd);
        let d = DMatrix::from_diagonal(&dv(&[1.0, -1.0]));
        assert_eq!(kernel_signature(&d, SIGN_TOL), KernelSignature::Neither);
    }

    #[test]
    fn kronecker_entries_by_double_loop() {
        let k0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let k1 = DMatrix::from_row_slice(2, 2, &[1.0, -0.3, -0.3, 3.0]);
        let s0 = DiscreteMmSpace::new(k0.clone(), vec![0.5, 0.5]).unwrap();
        let s1 = DiscreteMmSpace::new(k1.clone(), vec![0.25, 0.75]).unwrap();
        let p = assemble(&s0, &s1, 1.0).unwrap();
        let m = p.qp.m();
        for (mm, l, mp, lp) in [(0, 0, 0, 0), (0, 1, 1, 0), (1, 1, 0, 1), (1, 0, 1, 1)] {
            let want = 4.0 * k0[(mm, mp)] * k1[(l, lp)];
            assert!((m[(p.index(mm, l), p.index(mp, lp))] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_signs_rejected() {
        let s0 = triangle();
        let s1 = DiscreteMmSpace::new(-triangle().kernel().clone(), vec![1.0 / 3.0; 3]).unwrap();
        assert!(matches!(assemble(&s0, &s1, 1.0), Err(Error::KernelSignMismatch(_))));
        // both NSD is fine
        assert!(assemble(&s1, &s1, 1.0).is_ok());
    }

    #[test]
    fn one_point_spaces() {
        let s0 = DiscreteMmSpace::new(DMatrix::from_element(1, 1, 2.0), vec![1.0]).unwrap();
        let s1 = DiscreteMmSpace::new(DMatrix::from_element(1, 1, 0.5), vec![1.0]).unwrap();
        let p = assemble(&s0, &s1, 1.0).unwrap();
        let v = egw_value(&p, 0.0, &SolverConfig::default()).unwrap();
        assert!((v - 1.5f64.powi(2)).abs() < 1e-12);
        let a = gw_align(&p, 0.1, None, 1).unwrap();
        assert!((a.coupling.matrix[(0, 0)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coupling_flattening_round_trip() {
        let x = DVector::from_fn(6, |k, _| k as f64);
        let c = Coupling::from_flat(&x, 2, 3);
        // P[l, m] = x[m * 3 + l]
        assert_eq!(c.matrix[(2, 1)], 5.0);
        assert_eq!(c.matrix[(0, 1)], 3.0);
        assert_eq!(c.flat(), x);
    }

    #[test]
    fn random_couplings_have_exact_marginals() {
        let mu0 = [0.2, 0.3, 0.5];
        let mu1 = [0.1, 0.6, 0.3];
        for x in random_couplings(&mu0, &mu1, 10, 4).unwrap() {
            assert!(x.iter().all(|&v| v >= 0.0));
            let c = Coupling::from_flat(&x, 3, 3);
            assert!(c.marginal_residual(&mu0, &mu1) < 1e-15);
        }
    }

    #[test]
    fn uncentered_cloud_rejected() {
        let p0 = [dv(&[1.0]), dv(&[2.0])];
        let p1 = [dv(&[1.0]), dv(&[-1.0])];
        let r = euclidean_quadratic_assemble(&p0, &p1, &[0.5, 0.5], &[0.5, 0.5]);
        assert!(matches!(r, Err(Error::Uncentered { which: 0, .. })));
    }
}

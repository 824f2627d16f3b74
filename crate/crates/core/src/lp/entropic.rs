//! Entropic LP `min c'x - eps H(x)` over `{x >= 0 : Ax = b}` by Newton ascent on
//! the smooth dual `D(y) = b'y - eps sum exp((A'y - c)/eps - 1)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::polytope::Polytope;

/// Convergence tolerance on `||Ax - b||_inf`.
pub const DUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EntropicOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Dual start; skips epsilon continuation when present.
    pub warm_start: Option<DVector<f64>>,
}

impl Default for EntropicOptions {
    fn default() -> Self {
        Self { tol: DUAL_TOL, max_iter: 2000, warm_start: None }
    }
}

#[derive(Debug, Clone)]
pub struct EntropicLpSolution {
    pub x: DVector<f64>,
    /// `log x`, exact even where `x` underflows.
    pub log_x: DVector<f64>,
    /// Dual potentials for the rank-reduced rows.
    pub y: DVector<f64>,
    pub epsilon: f64,
    /// Primal objective `c'x - eps H(x)`.
    pub value: f64,
    /// Dual objective at `y`. Equals `value` at the optimum but its error is
    /// quadratic rather than linear in the feasibility residual.
    pub dual_value: f64,
    pub iterations: usize,
    pub residual: f64,
}

struct Dual<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    c: &'a DVector<f64>,
    eps: f64,
}

impl Dual<'_> {
    fn theta(&self, y: &DVector<f64>) -> DVector<f64> {
        (self.a.tr_mul(y) - self.c) / self.eps - DVector::from_element(self.c.len(), 1.0)
    }

    /// Dual value; `-inf` when the exponentials overflow.
    fn value(&self, y: &DVector<f64>, theta: &DVector<f64>) -> f64 {
        let max = theta.max();
        if max > 700.0 {
            return f64::NEG_INFINITY;
        }
        let s: f64 = theta.iter().map(|t| t.exp()).sum();
        self.b.dot(y) - self.eps * s
    }
}

/// Newton ascent at a fixed epsilon. Returns `(y, iterations, residual)`.
fn newton(d: &Dual, mut y: DVector<f64>, tol: f64, max_iter: usize) -> (DVector<f64>, usize, f64) {
    let k = d.a.nrows();
    let mut theta = d.theta(&y);
    let mut val = d.value(&y, &theta);
    let mut resid = f64::INFINITY;
    if !val.is_finite() {
        return (y, 0, resid);
    }
    for it in 0..max_iter {
        let x = theta.map(f64::exp);
        let grad = d.b - d.a * &x;
        resid = grad.amax();
        if resid <= tol {
            return (y, it, resid);
        }
        // H = A diag(x) A' / eps, solved by a truncated eigen-decomposition.
        let mut h = DMatrix::zeros(k, k);
        for j in 0..x.len() {
            if x[j] == 0.0 {
                continue;
            }
            let col = d.a.column(j);
            h.ger(x[j] / d.eps, &col, &col, 1.0);
        }
        let trace = h.trace();
        let eig = SymmetricEigen::new(h);
        let cutoff = 1e-14 * trace.max(f64::MIN_POSITIVE);
        let mut dir = DVector::zeros(k);
        let mut kept = 0;
        for (i, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > cutoff {
                let v = eig.eigenvectors.column(i);
                dir.axpy(v.dot(&grad) / lam, &v, 1.0);
                kept += 1;
            }
        }
        if kept == 0 || !dir.iter().all(|v| v.is_finite()) {
            dir = grad.clone();
        }
        let slope = grad.dot(&dir);
        let noise = 1e-13 * (val.abs() + d.b.dot(&y).abs() + 1.0);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let y_new = &y + t * &dir;
            let th_new = d.theta(&y_new);
            let v_new = d.value(&y_new, &th_new);
            if v_new >= val + 1e-4 * t * slope - noise {
                y = y_new;
                theta = th_new;
                val = v_new;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return (y, it, resid);
        }
    }
    let x = theta.map(f64::exp);
    resid = resid.min((d.b - d.a * &x).amax());
    (y, max_iter, resid)
}

/// Solves the entropic LP on `p` with cost `c` at strength `epsilon > 0`.
///
/// Without a warm start the solve runs an epsilon continuation starting from
/// `max(epsilon, ||c||_inf + 1)` and shrinking by a factor 5 per stage.
pub fn solve_entropic_lp(
    p: &Polytope,
    c: &DVector<f64>,
    epsilon: f64,
    opts: &EntropicOptions,
) -> Result<EntropicLpSolution> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::EpsilonNonpositive(epsilon));
    }
    if c.len() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "cost has {} entries, polytope has {} variables",
            c.len(),
            p.n()
        )));
    }
    let (a, b) = p.reduced();
    let full_residual = |theta: &DVector<f64>| (p.a() * theta.map(f64::exp) - p.b()).amax();

    // Redundant rows are implied by the kept ones, so the reduced residual is
    // driven a decade below the tolerance demanded on the full system.
    let inner_tol = 0.1 * opts.tol;
    let mut total = 0;
    if let Some(y0) = &opts.warm_start {
        let d = Dual { a, b, c, eps: epsilon };
        let (y, it, _) = newton(&d, y0.clone(), inner_tol, opts.max_iter);
        total = it;
        let sol = finish(p, c, epsilon, y, total, &full_residual);
        if sol.residual <= opts.tol {
            return Ok(sol);
        }
    }
    let mut eps_k = epsilon.max(c.amax() + 1.0);
    let mut y = DVector::zeros(a.nrows());
    loop {
        let last = eps_k <= epsilon;
        let d = Dual { a, b, c, eps: eps_k.max(epsilon) };
        let stage_tol = if last { inner_tol } else { opts.tol.max(1e-8) };
        let (y_new, it, _) = newton(&d, y, stage_tol, opts.max_iter);
        y = y_new;
        total += it;
        if last {
            break;
        }
        eps_k = (eps_k * 0.2).max(epsilon);
    }
    let sol = finish(p, c, epsilon, y, total, &full_residual);
    if !(sol.residual <= opts.tol) {
        return Err(Error::MaxIterations { iterations: total, residual: sol.residual });
    }
    Ok(sol)
}

fn finish(
    p: &Polytope,
    c: &DVector<f64>,
    eps: f64,
    y: DVector<f64>,
    iterations: usize,
    full_residual: &dyn Fn(&DVector<f64>) -> f64,
) -> EntropicLpSolution {
    let (a, b) = p.reduced();
    let log_x = (a.tr_mul(&y) - c) / eps - DVector::from_element(c.len(), 1.0);
    let x = log_x.map(f64::exp);
    // c'x - eps H(x) = sum x (c + eps log x)
    let value: f64 = x.iter().zip(c.iter().zip(log_x.iter())).map(|(&xi, (&ci, &li))| {
        if xi == 0.0 {
            0.0
        } else {
            xi * (ci + eps * li)
        }
    }).sum();
    let dual_value = b.dot(&y) - eps * x.sum();
    let residual = full_residual(&log_x);
    EntropicLpSolution { x, log_x, y, epsilon: eps, value, dual_value, iterations, residual }
}

//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Works on raw `(A, b, c)` for `min c'x s.t. Ax = b, x >= 0`. Rows of `A` are
//! expected to be linearly independent; a redundant row that survives phase 1
//! is dropped.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::solve_square;

const PIVOT_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    /// Basic columns, sorted.
    pub basis: Vec<usize>,
    pub pivots: usize,
}

struct Tableau {
    t: DMatrix<f64>,
    basis: Vec<usize>,
    live: Vec<bool>,
    rhs: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[(row, col)];
        let ncols = self.t.ncols();
        for k in 0..ncols {
            self.t[(row, k)] /= p;
        }
        for i in 0..self.t.nrows() {
            if i == row || !self.live[i] {
                continue;
            }
            let f = self.t[(i, col)];
            if f != 0.0 {
                for k in 0..ncols {
                    let v = self.t[(row, k)];
                    self.t[(i, k)] -= f * v;
                }
                self.t[(i, col)] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Minimizes `cost` over the columns `< allowed`, drawing pivots from `budget`.
    fn run(&mut self, cost: &[f64], allowed: usize, budget: &mut usize) -> Result<()> {
        let scale = 1.0 + cost.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let dtol = 1e-10 * scale;
        loop {
            if *budget == 0 {
                return Err(Error::NumericalFailure(format!(
                    "simplex exceeded {MAX_PIVOTS} pivots"
                )));
            }
            // Bland: first column with negative reduced cost.
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j];
                for (i, &bi) in self.basis.iter().enumerate() {
                    if self.live[i] {
                        d -= cost[bi] * self.t[(i, j)];
                    }
                }
                if d < -dtol {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.nrows() {
                if !self.live[i] {
                    continue;
                }
                let a = self.t[(i, col)];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.t[(i, self.rhs)].max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        if ratio < best && !tie || tie && self.basis[i] < self.basis[r] {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Err(Error::Unbounded(col));
            };
            self.pivot(row, col);
            *budget -= 1;
        }
    }
}

/// Solves `min c'x s.t. Ax = b, x >= 0`.
pub fn simplex(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<SimplexOutcome> {
    let (m, n) = a.shape();
    if b.len() != m || c.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "A is {m}x{n}, b has {}, c has {}",
            b.len(),
            c.len()
        )));
    }
    let rhs = n + m;
    let mut t = DMatrix::zeros(m, n + m + 1);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = sign * a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, rhs)] = sign * b[i];
    }
    let mut tab = Tableau { t, basis: (n..n + m).collect(), live: vec![true; m], rhs };
    let mut budget = MAX_PIVOTS;

    // Phase 1: minimize the sum of artificials.
    let mut cost1 = vec![0.0; n + m];
    cost1[n..].iter_mut().for_each(|v| *v = 1.0);
    tab.run(&cost1, n + m, &mut budget)?;
    let bscale = 1.0 + b.amax();
    let infeas: f64 = (0..m)
        .filter(|&i| tab.basis[i] >= n)
        .map(|i| tab.t[(i, rhs)].abs())
        .sum();
    if infeas > 1e-9 * bscale {
        return Err(Error::Infeasible);
    }
    // Drive remaining artificials out of the basis.
    for i in 0..m {
        if tab.basis[i] < n {
            continue;
        }
        let mut best = None;
        let mut best_abs = 1e-9;
        for j in 0..n {
            if tab.basis.contains(&j) {
                continue;
            }
            let v = tab.t[(i, j)].abs();
            if v > best_abs {
                best_abs = v;
                best = Some(j);
            }
        }
        match best {
            Some(j) => tab.pivot(i, j),
            None => tab.live[i] = false,
        }
    }

    // Phase 2 over the original columns only.
    let mut cost2 = vec![0.0; n + m];
    cost2[..n].copy_from_slice(c.as_slice());
    tab.run(&cost2, n, &mut budget)?;

    let rows: Vec<usize> = (0..m).filter(|&i| tab.live[i]).collect();
    let mut basis: Vec<usize> = rows.iter().map(|&i| tab.basis[i]).collect();
    basis.sort_unstable();
    // Recompute the basic solution from the original data to shed pivot noise.
    let ab = DMatrix::from_fn(rows.len(), basis.len(), |i, k| a[(rows[i], basis[k])]);
    let bb = DVector::from_fn(rows.len(), |i, _| b[rows[i]]);
    let mut x = DVector::zeros(n);
    match solve_square(&ab, &bb, 1e-14) {
        Some(xb) => {
            for (k, &j) in basis.iter().enumerate() {
                x[j] = xb[k].max(0.0);
            }
        }
        None => {
            for &row in &rows {
                x[tab.basis[row]] = tab.t[(row, rhs)].max(0.0);
            }
        }
    }
    let value = c.dot(&x);
    Ok(SimplexOutcome { x, value, basis, pivots: MAX_PIVOTS - budget })
}

//! JSON and CSV formats read and written by the command-line front end.
//!
//! Floats are emitted in shortest round-trip form, so every output parses
//! back to bit-identical values.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::certify::{CertificateOutcome, Reason, Verdict};
use crate::error::{Error, Result};
use crate::gw::{self, DiscreteMmSpace, GwProblem};
use crate::polytope::Polytope;
use crate::qp::ConcaveQp;
use crate::rates::RateRecord;

/// Tolerance used when factorizing a user-supplied `M`.
pub const FACTOR_TOL: f64 = 1e-12;

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Either standard form or a box, which is embedded with surplus variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolytopeSpec {
    Standard {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl PolytopeSpec {
    pub fn build(&self) -> Result<Polytope> {
        match self {
            Self::Standard { a, b } => Polytope::validate(matrix_from_rows(a)?, DVector::from_vec(b.clone())),
            Self::Box { lower, upper } => Polytope::box_to_standard(lower, upper),
        }
    }

    pub fn standard(p: &Polytope) -> Self {
        Self::Standard { a: matrix_to_rows(p.a()), b: vec_of(p.b()) }
    }
}

/// Input of `vertices` and `lp solve`: a polytope plus an optional cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpFile {
    #[serde(flatten)]
    pub polytope: PolytopeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    pub c: Vec<f64>,
    pub polytope: PolytopeSpec,
}

impl ProblemFile {
    pub fn build(&self) -> Result<ConcaveQp> {
        let p = self.polytope.build()?;
        let c = DVector::from_vec(self.c.clone());
        match (&self.m, &self.b) {
            (Some(m), None) => ConcaveQp::from_m(&matrix_from_rows(m)?, c, p, FACTOR_TOL),
            (None, Some(b)) => ConcaveQp::new(matrix_from_rows(b)?, c, p),
            _ => Err(Error::BadInput("problem needs exactly one of \"M\" and \"B\"".into())),
        }
    }

    pub fn from_qp(qp: &ConcaveQp) -> Self {
        Self {
            m: None,
            b: Some(matrix_to_rows(qp.b())),
            c: vec_of(qp.c()),
            polytope: PolytopeSpec::standard(qp.polytope()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub kernel: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpacesFile {
    Kernels {
        space0: SpaceSpec,
        space1: SpaceSpec,
    },
    Points {
        points0: Vec<Vec<f64>>,
        points1: Vec<Vec<f64>>,
        mode: String,
        /// Uniform when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights0: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights1: Option<Vec<f64>>,
    },
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

impl SpacesFile {
    /// `q` applies to the kernel form only; the Euclidean form fixes it at 2.
    pub fn build(&self, q: f64) -> Result<GwProblem> {
        match self {
            Self::Kernels { space0, space1 } => {
                let s0 = DiscreteMmSpace::new(matrix_from_rows(&space0.kernel)?, space0.weights.clone())?;
                let s1 = DiscreteMmSpace::new(matrix_from_rows(&space1.kernel)?, space1.weights.clone())?;
                gw::assemble(&s0, &s1, q)
            }
            Self::Points { points0, points1, mode, weights0, weights1 } => {
                if mode != "euclidean22" {
                    return Err(Error::BadInput(format!("unknown mode {mode:?}")));
                }
                let p0: Vec<DVector<f64>> = points0.iter().map(|p| DVector::from_vec(p.clone())).collect();
                let p1: Vec<DVector<f64>> = points1.iter().map(|p| DVector::from_vec(p.clone())).collect();
                let w0 = weights0.clone().unwrap_or_else(|| uniform(p0.len()));
                let w1 = weights1.clone().unwrap_or_else(|| uniform(p1.len()));
                gw::euclidean_quadratic_assemble(&p0, &p1, &w0, &w1)
            }
        }
    }

    pub fn weights(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Self::Kernels { space0, space1 } => (space0.weights.clone(), space1.weights.clone()),
            Self::Points { points0, points1, weights0, weights1, .. } => (
                weights0.clone().unwrap_or_else(|| uniform(points0.len())),
                weights1.clone().unwrap_or_else(|| uniform(points1.len())),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpOutput {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValueOutput {
    pub epsilon: f64,
    pub u: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GradOutput {
    pub epsilon: f64,
    pub u: Vec<f64>,
    pub grad: Vec<f64>,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstantsOutput {
    pub r1: f64,
    pub rh: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon_max: f64,
    pub optimal_cells: Vec<usize>,
    pub gamma_i: Vec<f64>,
    pub delta_i: Vec<f64>,
    pub g0_min: f64,
    pub b_op_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveOutput {
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub epsilon: f64,
    pub g_value: f64,
    pub converged: bool,
}

impl From<&crate::descent::DescentResult> for SolveOutput {
    fn from(r: &crate::descent::DescentResult) -> Self {
        Self {
            u: vec_of(&r.u),
            x: vec_of(&r.x),
            grad_norm: r.grad_norm,
            iterations: r.iterations,
            epsilon: r.epsilon,
            g_value: r.g_value,
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateOutput {
    pub verdict: Verdict,
    pub reason: Reason,
    pub u_bar: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub while_iterations: usize,
    pub rng_seed: u64,
}

impl From<&CertificateOutcome> for CertificateOutput {
    fn from(c: &CertificateOutcome) -> Self {
        Self {
            verdict: c.verdict,
            reason: c.reason,
            u_bar: vec_of(&c.u_bar),
            x_bar: vec_of(&c.x_bar),
            while_iterations: c.while_iterations,
            rng_seed: c.rng_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GwValueOutput {
    pub epsilon: f64,
    pub q: f64,
    pub constant_term: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GwAlignOutput {
    pub epsilon: f64,
    pub q: f64,
    pub cost: f64,
    pub g_value: f64,
    /// Rows indexed by points of space1, columns by points of space0.
    pub coupling: Vec<Vec<f64>>,
    pub certificate: CertificateOutput,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Shortest round-trip form; NaN prints as `NaN`.
fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:?}")
    }
}

pub fn csv_rows(header: Option<&[&str]>, rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub const SWEEP_HEADER: [&str; 5] = ["epsilon", "dist", "cost_gap", "g_eps_min", "iterations"];

pub fn sweep_csv(records: &[RateRecord]) -> String {
    let mut out = SWEEP_HEADER.join(",");
    out.push('\n');
    for r in records {
        let nums = [r.epsilon, r.dist, r.cost_gap, r.g_eps_min].map(fmt_f64);
        out.push_str(&format!("{},{}\n", nums.join(","), r.iterations));
    }
    out
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::BadInput(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn polytope_forms_parse() {
        let s: LpFile = serde_json::from_str(r#"{"A": [[1, 1]], "b": [1], "c": [1, 0]}"#).unwrap();
        assert!(matches!(s.polytope, PolytopeSpec::Standard { .. }));
        assert_eq!(s.c, Some(vec![1.0, 0.0]));
        let b: LpFile = serde_json::from_str(r#"{"lower": [0, 0], "upper": [1, 2]}"#).unwrap();
        assert_eq!(b.polytope.build().unwrap().n(), 4);
    }

    #[test]
    fn problem_round_trip() {
        let qp = instances::fig1();
        let f = ProblemFile::from_qp(&qp);
        let text = to_json(&f).unwrap();
        let back: ProblemFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        let qp2 = back.build().unwrap();
        assert_eq!(qp2.b(), qp.b());
    }

    #[test]
    fn m_and_b_together_rejected() {
        let f: ProblemFile = serde_json::from_str(
            r#"{"M": [[1]], "B": [[1]], "c": [0], "polytope": {"lower": [0], "upper": [1]}}"#,
        )
        .unwrap();
        assert!(matches!(f.build(), Err(Error::BadInput(_))));
    }

    #[test]
    fn floats_round_trip_exactly() {
        let v = vec![0.1 + 0.2, 1e-300, -2.5e17, std::f64::consts::PI];
        let s = to_json(&v).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        let line = csv_rows(None, &[v.clone()]);
        let parsed: Vec<f64> = line.trim().split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(parsed, v);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, "a").unwrap();
        write_atomic(&p, "b").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "b");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

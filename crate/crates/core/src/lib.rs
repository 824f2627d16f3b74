//! Entropically penalized concave quadratic programs.
//!
//! The crate solves `min_{x in K} -1/2 x'Mx + c'x - eps H(x)` over a
//! standard-form polytope `K` through the variational form
//! `g_eps(u) = 1/2 |u|^2 + min_K (c - B'u)'x - eps H(x)` with `M = B'B`,
//! certifies local minimizers of `g_0`, measures approximation rates as
//! `eps -> 0`, and compiles discrete Gromov-Wasserstein problems into the same
//! form.
//!
//! Start with the examples, one per capability:
//!
//! - `polytope_vertices`: box embedding, vertex enumeration, `R1` and `RH`
//! - `entropic_lp`: dual Newton against Sinkhorn on a transport polytope
//! - `variational_qp`: `g_eps`, its gradient, descent, annealing, primal recovery
//! - `certify_example1`: a saddle on a cell boundary next to a true minimizer
//! - `rate_sweep`: distance to the optimal face against the exponential bound
//! - `slow_rates`: the linear-rate counterexamples and Lambert W
//! - `gw_alignment`: kernel and Euclidean Gromov-Wasserstein alignment
//!
//! The `entroqp` binary exposes the same operations on JSON files.

pub mod certify;
pub mod cli;
pub mod descent;
pub mod error;
pub mod gw;
pub mod instances;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod polytope;
pub mod qp;
pub mod rates;

pub use error::{Error, Result};
pub use polytope::{Polytope, VertexSet};
pub use qp::ConcaveQp;

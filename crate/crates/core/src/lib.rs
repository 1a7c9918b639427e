//! Numerical laboratory for least-energy solutions of the coupled cubic
//! elliptic system
//!
//! ```text
//! -Δu + λ₁u = u³ + βuv²,   -Δv + λ₂v = v³ + βu²v
//! ```
//!
//! on boxes with Neumann or Dirichlet boundary conditions.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod descent;
pub mod error;
mod fiber;
pub mod grid;
mod linalg;
pub mod operators;
pub mod regimes;
pub mod scalar;
pub mod system;

pub use error::{Error, Result};
pub use grid::{default_nodes, integrate, l2_inner, lp_norm, overlap, Boundary, DomainSpec, Field, Grid, Pair};
pub use operators::{
    bilinear_b, energy, hessian_apply, laplacian_apply, residual, scalar_energy, SpectralBasis,
    SubspaceSplit, SystemParams,
};
pub use descent::{ScalarSolveOptions, SolveOptions, TraceEntry};
pub use scalar::{scalar_nehari_project, solve_scalar, solve_scalar_definite, solve_scalar_indefinite, ScalarReport};
pub use regimes::{auto_select_method, classify_regime, ClassifyOptions, MethodChoice, RegimeReport};
pub use system::{classify_solution, nehari_scaling, solve_system, Method, SolutionFlags, SolveReport};
pub use batch::{run_sweep, MethodSelector, RunConfig, SweepResult};

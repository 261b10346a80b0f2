//! Dense semidefinite programming.
//!
//! Problems are in standard primal form
//!
//! ```text
//! minimize ⟨C, X⟩  subject to  ⟨A_i, X⟩ = b_i,  X ⪰ 0,
//! ```
//!
//! with `X` block diagonal and every block real symmetric. The dual is
//! `maximize bᵀy subject to C − Σ y_i A_i ⪰ 0`.

mod problem;
mod realify;
mod sdpa;
mod solver;

pub use problem::{Constraint, SdpProblem};
pub use realify::{HermitianConstraint, HermitianProgram};
pub use sdpa::{export_sdpa, import_sdpa};
pub use solver::{solve, Certificate, SdpSolution, SdpStatus, SolverOptions};

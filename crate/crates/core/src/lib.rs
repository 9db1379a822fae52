//! Projection and contraction solvers for monotone variational inequalities.
//!
//! Given a closed convex set `C` and a monotone, Lipschitz mapping `F`, the
//! solvers look for `x* ∈ C` with `⟨F(x*), x − x*⟩ ≥ 0` for all `x ∈ C`.
//!
//! ```
//! use vipc::{solve, AlgorithmId, PerturbationSchedule, ProjectorSpec, SolverConfig};
//! use vipc::problem::scaled_identity;
//!
//! let problem = scaled_identity(ProjectorSpec::cube(3, 1.0, 2.0).unwrap(), 1.0);
//! let report = solve(&problem, AlgorithmId::Pc2, &SolverConfig::default(), &PerturbationSchedule::None, &[5.0; 3]).unwrap();
//! assert!(report.status.is_converged());
//! assert!(report.x_final.iter().all(|v| (v - 1.0).abs() < 1e-5));
//! ```

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod linesearch;
pub mod oracle;
pub mod perturbations;
pub mod problem;
pub mod problems;
pub mod projections;
pub mod solver;
pub mod trace;

pub use algorithms::{AlgorithmId, StepOutcome, StepState};
pub use config::SolverConfig;
pub use error::{Result, ViError};
pub use perturbations::PerturbationSchedule;
pub use problem::{residual, ViProblem};
pub use projections::{project_l1_ball, ProjectorSpec, SetKind};
pub use solver::{solve, solve_with};
pub use trace::{AuditResult, ErgodicPoint, IterationRecord, SolveReport, SolveStatus};

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

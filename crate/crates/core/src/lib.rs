//! Analytic necessary conditions for bipartite quantum correlations.
//!
//! Behaviours `P(ab|xy)` are arranged as `(m_A d_A) × (m_B d_B)` matrices, and
//! quantumness is constrained through trace norms of those matrices, closed-form
//! dual certificates of the level-1 moment relaxation, and Bell-expression
//! bounds derived from them.
//!
//! ```
//! use bellcone_core::{conditions, generators};
//!
//! let pr = generators::pr_box(2).unwrap();
//! let report = conditions::check_thm1(&pr, 1e-9).unwrap();
//! assert!(!report.satisfied); // ‖P‖₁ = 1 + √2 > 2
//! ```

pub mod bell;
pub mod closed_forms;
pub mod conditions;
pub mod error;
pub mod generators;
pub mod io;
pub mod model;
pub mod numlin;
pub mod slice;

pub use error::{Error, Result};
pub use model::{Behaviour, BehaviourMatrix, MatrixKind, Scenario};

/// Environment variable overriding the default validation/condition tolerance.
pub const TOL_ENV_VAR: &str = "BELLCONE_TOL";

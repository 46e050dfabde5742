//! Combinatorial multi-armed bandit laboratory.
//!
//! The crate bundles four cardinality-constrained combinatorial bandit
//! policies (CMOSS, CUCB, EXP3.M and FTRL with a hybrid regularizer),
//! Bernoulli environments with semi-bandit and cascading feedback, and a
//! harness that runs replicated regret/runtime experiments.
//!
//! All numerical code is generic over a floating point scalar implementing
//! [`Real`]; the aliases at the crate root fix it to `f64`, which is what the
//! harness and the `cmab` binary use.
//!
//! Arm indices are zero-based throughout.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod env;
mod error;
pub mod harness;
pub mod instance;
pub mod policies;
mod real;
pub mod solvers;

pub use error::CmabError;
pub use instance::{Action, ExaminationOrder, Feedback, FeedbackMode, NoClickRule};
pub use policies::{Algorithm, Policy};
pub use real::Real;

pub type Result<T, E = CmabError> = std::result::Result<T, E>;

/// Problem instance over `f64` means.
pub type ProblemInstance = instance::ProblemInstance<f64>;
/// Bernoulli environment over `f64` means.
pub type Environment = env::Environment<f64>;
/// Per-replication regret record over `f64`.
pub type RunRecord = env::RunRecord<f64>;
/// CMOSS / CUCB state over `f64`.
pub type UcbPolicy = policies::ucb::UcbPolicy<f64>;
/// EXP3.M state over `f64`.
pub type Exp3m = policies::exp3m::Exp3m<f64>;
/// HYBRID state over `f64`.
pub type Hybrid = policies::hybrid::Hybrid<f64>;
/// Solver options over `f64`.
pub type SolverOptions = solvers::SolverOptions<f64>;

//! Heavy-ball synthetic gradient extrapolation (HB-SGE) and the baselines it is
//! measured against, plus the harness that reruns the benchmark grid.
//!
//! HB-SGE extrapolates the gradient with its most recent change,
//! `g + alpha_t (g_t - g_{t-1})`, and feeds the result through an
//! exponential-moving-average momentum buffer. `alpha_t` decays as
//! `alpha_max * exp(-t / tau)` and is halved whenever the gradient norm grows.
//!
//! * [`numerics`]: vectors, matrices, QR, Cholesky, small eigenvalue problems, RNG
//! * [`problems`]: quadratics with a prescribed spectrum, Rosenbrock, Beale
//! * [`optimizers`]: SGD, heavy-ball momentum, Nesterov, Adam, HB-SGE
//! * [`harness`]: run loop, divergence detection, learning-rate search, suites
//! * [`stability`]: exact per-eigenmode update matrices and their spectral radii
//! * [`report`]: CSV / markdown output

pub mod error;
pub mod harness;
pub mod numerics;
pub mod optimizers;
pub mod problems;
pub mod report;
pub mod stability;

pub use error::{Error, Result};
pub use harness::{run, run_suite, RunConfig, RunResult, RunStatus, TraceRow};
pub use numerics::{DenseMatrix, DenseVector, SeededRng};
pub use optimizers::{Method, OptimizerConfig, OptimizerState};
pub use problems::{Problem, ProblemKind, QuadraticProblem};

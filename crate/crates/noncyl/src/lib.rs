//! Solver and certification harness for doubly nonlinear parabolic flows
//! `∂_t(|u|^{q-1}u) = div(D_ξ f(x,u,Du)) - D_u f(x,u,Du)` on time-varying
//! spatial domains.
//!
//! The pipeline covers the space-time domain by short cylinders, advances
//! each with implicit minimizing-movement steps of the convex step
//! functional `(1/h)∫𝔟[u_prev, v] + ∫f(x, v, Dv)`, glues the slabs, and
//! then certifies the glued field numerically: the defining variational
//! inequality, energy bounds, the dual-norm bound on `∂_t(|u|^{q-1}u)`,
//! an integration-by-parts inequality sensitive to how fast the domain
//! shrinks, initial-value attainment, and time-continuity moduli.
//!
//! Modules:
//! - [`grid`]: cell-centered lattices.
//! - [`geometry`]: slice rasterization, distance transforms, excess,
//!   measure density, growth bounds, distance cut-offs.
//! - [`calculus`]: power map, boundary term, integrands, power inequalities.
//! - [`fields`]: grid functions, norms, mollification, Steklov averages.
//! - [`solver`]: cylinder covers and the minimizing-movement scheme.
//! - [`verify`]: the certification checks and diagnostics report.
//! - [`scenario`]: built-in problem setups and exact oracles.
//! - [`config`]/[`csvio`]/[`study`]: run configuration, artifacts, studies.

pub mod calculus;
pub mod config;
pub mod csvio;
pub mod fields;
pub mod geometry;
pub mod grid;
mod lbfgs;
pub mod scenario;
pub mod solver;
pub mod study;
pub mod verify;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid: {0}")]
    Grid(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("integrand: {0}")]
    Integrand(String),
    #[error("field: {0}")]
    Field(String),
    #[error("optimizer did not reach tolerance: residual {residual} after {iterations} iterations")]
    Optimizer { residual: f64, iterations: usize },
    #[error("solver: {0}")]
    Solver(String),
    #[error("verify: {0}")]
    Verify(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

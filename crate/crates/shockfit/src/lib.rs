//! Steady transonic shock fitting for 2-D exothermically reacting Euler flow
//! in a nearly flat nozzle, posed in Lagrangian (stream-function) coordinates.
//!
//! The pipeline, in the order a solve runs it:
//!
//! 1. [`background`]: the uniform normal-shock pair connecting a supersonic
//!    inflow to a subsonic outflow, plus the derived constants `K1`, `K2` and
//!    the frozen reaction source terms.
//! 2. [`locator`]: the scalar solvability equation `R(xi) = P*` whose root is
//!    the approximate shock position, classified under one of four
//!    perturbation hypotheses relating the wall-perturbation scale `sigma`
//!    to the reaction rate `kappa`.
//! 3. [`linfield`]: the linearized field problems: an explicit supersonic
//!    march upstream, jump-transfer coefficients across the front, an
//!    elliptic pressure/flow-angle solve downstream, and transport closures.
//! 4. [`nonlinear`]: the fitted-front iteration: nonlinear upstream march,
//!    front-straightening coordinate map, a solvability root for the front
//!    displacement each sweep, and the contraction loop that ends with the
//!    exact jump conditions holding on the fitted front.
//!
//! [`config`], [`output`] and [`verify`] back the `shockfit` command-line
//! binary; everything else is plain library code.

// Validation sites use `!(x > 0.0)` so that NaN fails the check; the
// suggested `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Indexed loops match the matrix notation in the stencil and elimination code.
#![allow(clippy::needless_range_loop)]

pub mod background;
pub mod banded;
pub mod config;
pub mod gas;
pub mod grid;
pub mod linfield;
pub mod locator;
pub mod nonlinear;
pub mod output;
pub mod profile;
pub mod verify;

use thiserror::Error;

/// Crate-wide error type. The CLI maps categories onto exit codes:
/// config/validation errors → 2, solvability/admissibility → 3,
/// numeric trouble (CFL, divergence, root failures) → 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no shock: {0}")]
    NoShock(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("no solution: P* = {p_star:.6e} outside attainable range [{r_inf:.6e}, {r_sup:.6e}]")]
    NoSolution { r_inf: f64, r_sup: f64, p_star: f64 },
    #[error("admissibility failure: {0}")]
    Admissibility(String),
    #[error(
        "solvability failure: compatibility residual {residual:.6e} exceeds tolerance {tol:.6e}"
    )]
    Solvability { residual: f64, tol: f64 },
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit status for the CLI: 2 config, 3 solvability/admissibility, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::Domain(_) | Error::Config(_) | Error::Io(_) => 2,
            Error::NoShock(_)
            | Error::NoSolution { .. }
            | Error::Admissibility(_)
            | Error::Solvability { .. } => 3,
            Error::Numeric(_) | Error::Divergence(_) => 4,
        }
    }
}

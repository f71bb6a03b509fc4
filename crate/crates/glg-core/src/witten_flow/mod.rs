//! Solvers and verification experiments for the gauged Witten equations
//!
//! ```text
//! F + mu = delta,    T + J S + grad H = 0,
//! ```
//!
//! with `T = grad^A_t P`, `S = grad^A_s P` and `F = d_s a_t - d_t a_s`.

pub mod action;
pub mod decay;
pub mod flowline;
pub mod identities;
pub mod max_principle;
pub mod solver;
pub mod triviality;

pub use action::{action_functional, action_gradient_check, Path1D};
pub use decay::{decay_experiment, even_strip, refined_strip, stable_manifold_strip, DecayParams, StripSolution};
pub use flowline::{gradient_flowline, Trajectory};
pub use identities::{
    bochner_fields, bochner_verify, bochner_verify_pair, holomorphy_check, holomorphy_check_pair, holomorphy_field,
    BochnerFields, IdentityOptions,
};
pub use max_principle::{envelope_margins, max_principle_envelope, EnvelopeKind, EnvelopeMargins};
pub use solver::{solve_witten, solve_witten_best, Dirichlet};
pub use triviality::{triviality_experiment, TrivialityParams};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Gradient descent on the squared residual with Armijo backtracking.
    Descent,
    /// Gauss-Newton with Levenberg-Marquardt damping.
    Newton,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeFix {
    /// `d_t a_t + d_s a_s = 0` at every free node.
    Coulomb,
    /// `a_t = 0` at every free node.
    Temporal,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    /// Banded Cholesky up to 257^2 nodes, conjugate gradients above.
    Auto,
    Direct,
    Iterative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub method: Method,
    pub gauge_fix: GaugeFix,
    /// Target for the L2 norm of the stacked residual (equations plus gauge rows).
    pub tol: f64,
    pub max_iter: usize,
    /// Initial Levenberg-Marquardt parameter, relative to the diagonal of `J^T J`.
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub linear: LinearSolver,
    /// Relative tolerance of the inner conjugate-gradient solve.
    pub cg_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::Newton,
            gauge_fix: GaugeFix::Coulomb,
            tol: 1e-10,
            max_iter: 50,
            lambda0: 1e-6,
            lambda_up: 10.0,
            lambda_down: 0.1,
            linear: LinearSolver::Auto,
            cg_tol: 1e-12,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.lambda0 >= 0.0) || !(self.lambda_up > 1.0) || !(self.lambda_down < 1.0) {
            return Err(Error::Config("solve options need tol > 0, lambda0 >= 0, lambda_up > 1, lambda_down < 1".into()));
        }
        if !(self.cg_tol > 0.0) {
            return Err(Error::Config("cg_tol must be positive".into()));
        }
        Ok(())
    }
}

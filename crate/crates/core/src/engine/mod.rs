//! Solving the adjoint equation, assembling invariants, Lewis–Riesenfeld
//! spectra and propagators, and the Schrödinger oracle they are checked
//! against.

mod fd;
mod iec;
mod invariant;
mod nmr;
mod ode;
mod oracle;
mod so5;
mod spectrum;
mod trajectory;

pub use fd::{derivative_weights, differentiate};
pub use iec::{iec_two_level, IecAnsatz, IecResult};
pub use invariant::{
    assemble_invariant, verify_invariant, verify_with_oracle, DynamicalInvariant, InvariantKind,
    ResidualReport,
};
pub use nmr::{nmr_eigensystem, nmr_exact, NmrEigensystem, NmrParams, NmrSolution};
pub use ode::{integrate, Method, OdeState, SolverOptions, TimeGrid};
pub use oracle::{propagate, schrodinger_oracle, EvolutionOperator, PropagatorSource};
pub use so5::{so5_dtype_solve, So5Report, SO5_DTYPE_LABELS};
pub use spectrum::{
    evolution_operator, lr_spectrum, lr_spectrum_from_frames, LRSpectrum, DEGENERACY_TOL,
};
pub use trajectory::{solve_adjoint, CoefficientTrajectory};

use thiserror::Error;

use crate::expr::EvalError;
use crate::lie::LieError;
use crate::reduction::ReductionError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("eigenvalues {n} and {m} come within {gap:e} of each other at t = {t}")]
    Degeneracy { t: f64, n: usize, m: usize, gap: f64 },
    #[error("case mismatch: found non-zero {offending:?}, allowed {allowed}")]
    CaseMismatch { allowed: String, offending: Vec<String> },
    #[error("{what} vanishes at t = {t}")]
    Singularity { t: f64, what: String },
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

impl EngineError {
    /// Time at which a failure happened, when there is one.
    pub fn time(&self) -> Option<f64> {
        match self {
            EngineError::Integration { t, .. }
            | EngineError::Degeneracy { t, .. }
            | EngineError::Singularity { t, .. } => Some(*t),
            EngineError::Eval(e) => Some(e.t),
            _ => None,
        }
    }
}

/// Maps coefficient failures inside a right-hand side to an integration
/// error at that time.
pub(crate) fn at_time<E: std::fmt::Display>(t: f64) -> impl FnOnce(E) -> EngineError {
    move |e| EngineError::Integration {
        t,
        reason: e.to_string(),
    }
}

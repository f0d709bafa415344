//! su(4) generator bases, structure constants, the two-qubit Hamiltonian
//! family and its adjoint representation.

mod adjoint;
mod basis;
mod hamiltonian;
mod structure;

pub use adjoint::{adjoint_from_coefficients, adjoint_of_matrix, AdjointMatrix};
pub use basis::{
    lambda_matrix, lambda_spinor_relations, spinor_labels, BasisKind, Generator, GeneratorBasis,
    LambdaRelation, Pauli, SignedLabel, SpinorLabel, BASIS_TOL, SPINOR_ORDER,
};
pub use hamiltonian::{Coefficient, HamiltonianSpec, COEFFICIENT_LABELS, COEFFICIENT_NAMES};
pub use structure::{structure_constants, StructureConstants, STRUCTURE_TOL};

use thiserror::Error;

use crate::expr::EvalError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error("basis has no generators")]
    EmptyBasis,
    #[error("generator `{label}` is not Hermitian")]
    NotHermitian { label: String },
    #[error("generators {i} and {j} are not trace-orthogonal with a common norm (tr = {value})")]
    NotOrthogonal { i: usize, j: usize, value: f64 },
    #[error("unknown generator label `{0}`")]
    UnknownLabel(String),
    #[error("commutator of generators {i} and {j} leaves the span (residual {residual:e})")]
    Closure { i: usize, j: usize, residual: f64 },
    #[error("Hamiltonian term `{0}` lies outside the basis span")]
    OutsideSpan(String),
    #[error("at least one coupling J_i must be non-zero")]
    NoCoupling,
    #[error("unknown coefficient name `{0}`")]
    UnknownCoefficient(String),
    #[error("iA is not real antisymmetric at t = {t} (defect {defect:e})")]
    NotAntisymmetric { t: f64, defect: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

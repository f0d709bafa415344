use serde::Serialize;

use super::{at_time, integrate, EngineError, SolverOptions, TimeGrid};
use crate::lie::HamiltonianSpec;
use crate::linalg::{frobenius, identity, unitarity_defect, CMat, CVec, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagatorSource {
    /// Assembled from an invariant's eigenframe and phases.
    Lr,
    /// Direct integration of `dU/dt = -iHU`.
    Oracle,
}

/// `U(t_k; t_0)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionOperator {
    pub grid: TimeGrid,
    pub matrices: Vec<CMat>,
    pub source: PropagatorSource,
}

impl EvolutionOperator {
    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn unitarity_drift(&self) -> Vec<f64> {
        self.matrices.iter().map(unitarity_defect).collect()
    }

    pub fn max_unitarity_drift(&self) -> f64 {
        self.unitarity_drift().into_iter().fold(0.0, f64::max)
    }

    pub fn evolve(&self, psi0: &CVec) -> Vec<CVec> {
        self.matrices.iter().map(|u| u * psi0).collect()
    }

    /// Largest `‖U_k − V_k‖_F` against another propagator on the same grid.
    pub fn max_distance(&self, other: &EvolutionOperator) -> f64 {
        self.matrices
            .iter()
            .zip(&other.matrices)
            .map(|(a, b)| frobenius(&(a - b)))
            .fold(0.0, f64::max)
    }
}

/// Propagator of an arbitrary Hermitian `h(t)` of size `dim`.
pub fn propagate<F>(
    h: F,
    dim: usize,
    grid: &TimeGrid,
    opts: &SolverOptions,
) -> Result<EvolutionOperator, EngineError>
where
    F: Fn(f64) -> Result<CMat, EngineError>,
{
    let rhs = |t: f64, u: &CMat| -> Result<CMat, EngineError> { Ok(h(t)? * u * (-I)) };
    let matrices = integrate(rhs, identity(dim), grid, opts)?;
    Ok(EvolutionOperator {
        grid: *grid,
        matrices,
        source: PropagatorSource::Oracle,
    })
}

/// Reference propagator of the two-qubit Hamiltonian.
pub fn schrodinger_oracle(
    h: &HamiltonianSpec,
    grid: &TimeGrid,
    opts: &SolverOptions,
) -> Result<EvolutionOperator, EngineError> {
    propagate(|t| h.matrix_at(t).map_err(at_time(t)), 4, grid, opts)
}

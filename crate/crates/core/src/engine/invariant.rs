use std::fmt;

use serde::Serialize;

use super::{
    differentiate, schrodinger_oracle, CoefficientTrajectory, EngineError, EvolutionOperator,
    SolverOptions, TimeGrid,
};
use crate::lie::{GeneratorBasis, HamiltonianSpec};
use crate::linalg::{commutator, expectation, frobenius, hermitian_defect, identity, re, CMat, CVec, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InvariantKind {
    S,
    D,
    Full,
    Custom,
}

impl fmt::Display for InvariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InvariantKind::S => "S",
            InvariantKind::D => "D",
            InvariantKind::Full => "full",
            InvariantKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// `I(t_k)` on a grid, with `İ(t_k)` when it is known in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalInvariant {
    grid: TimeGrid,
    matrices: Vec<CMat>,
    derivatives: Option<Vec<CMat>>,
    kind: InvariantKind,
}

impl DynamicalInvariant {
    pub fn new(grid: TimeGrid, matrices: Vec<CMat>, kind: InvariantKind) -> Result<Self, EngineError> {
        if matrices.len() != grid.len() {
            return Err(EngineError::Argument(format!(
                "{} matrices for {} grid points",
                matrices.len(),
                grid.len()
            )));
        }
        Ok(DynamicalInvariant {
            grid,
            matrices,
            derivatives: None,
            kind,
        })
    }

    /// Samples a closed form and its derivative.
    pub fn from_closed_form<F, D>(grid: TimeGrid, kind: InvariantKind, f: F, df: D) -> Self
    where
        F: Fn(f64) -> CMat,
        D: Fn(f64) -> CMat,
    {
        let times = grid.times();
        DynamicalInvariant {
            grid,
            matrices: times.iter().map(|&t| f(t)).collect(),
            derivatives: Some(times.iter().map(|&t| df(t)).collect()),
            kind,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kind(&self) -> InvariantKind {
        self.kind
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.matrices
    }

    pub fn matrix(&self, k: usize) -> &CMat {
        &self.matrices[k]
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivatives.is_some()
    }

    /// `İ` on the grid: analytic when available, otherwise fourth-order
    /// finite differences.
    pub fn derivatives(&self) -> Vec<CMat> {
        match &self.derivatives {
            Some(d) => d.clone(),
            None => differentiate(&self.matrices, self.grid.dt()),
        }
    }

    /// Drops the closed-form derivative so checks fall back to finite
    /// differences.
    pub fn without_derivative(mut self) -> Self {
        self.derivatives = None;
        self
    }

    /// `c1 I + c2 · 1 + c3 Λ` for constant `Λ`; a DI again when `[H, Λ] = 0`.
    pub fn affine(&self, c1: f64, c2: f64, c3: f64, lambda: &CMat) -> Self {
        let n = self.matrices[0].nrows();
        let shift = identity(n) * re(c2) + lambda * re(c3);
        DynamicalInvariant {
            grid: self.grid,
            matrices: self.matrices.iter().map(|m| m * re(c1) + &shift).collect(),
            derivatives: self
                .derivatives
                .as_ref()
                .map(|d| d.iter().map(|m| m * re(c1)).collect()),
            kind: self.kind,
        }
    }
}

/// `I(t_k) = Σ g_i(t_k) T_i`. Block trajectories with an embedding are
/// zero-padded when `basis` is the full 15-element basis.
pub fn assemble_invariant(
    traj: &CoefficientTrajectory,
    basis: &GeneratorBasis,
    kind: InvariantKind,
) -> Result<DynamicalInvariant, EngineError> {
    let matrices: Vec<CMat> = if traj.dim() == basis.len() {
        traj.vectors.iter().map(|g| basis.combine_real(g)).collect()
    } else if basis.len() == 15 && traj.indices.is_some() {
        traj.embedded()?.iter().map(|g| basis.combine_real(g)).collect()
    } else {
        return Err(EngineError::Argument(format!(
            "{}-component trajectory does not fit a basis of {}",
            traj.dim(),
            basis.len()
        )));
    };
    DynamicalInvariant::new(traj.grid, matrices, kind)
}

/// Per-grid-point residuals of an invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub times: Vec<f64>,
    /// `‖İ + i[H, I]‖_F`.
    pub di_residual: Vec<f64>,
    /// Largest `|⟨ψ(t)|I(t)|ψ(t)⟩ − ⟨ψ(0)|I(0)|ψ(0)⟩|` over the probe states.
    pub expectation_drift: Vec<f64>,
    pub max_di_residual: f64,
    pub max_expectation_drift: f64,
    pub max_hermitian_defect: f64,
    pub analytic_derivative: bool,
}

impl ResidualReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_di_residual <= tol
    }
}

/// Residual check against a propagator computed elsewhere.
pub fn verify_with_oracle(
    inv: &DynamicalInvariant,
    h: &HamiltonianSpec,
    oracle: Option<&EvolutionOperator>,
    states: &[CVec],
) -> Result<ResidualReport, EngineError> {
    let times = inv.grid.times();
    let deriv = inv.derivatives();
    let mut di = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let hm = h.matrix_at(t)?;
        let r = &deriv[k] + commutator(&hm, &inv.matrices[k]) * I;
        di.push(frobenius(&r));
    }
    let mut drift = vec![0.0; times.len()];
    if let Some(u) = oracle {
        if u.matrices.len() != times.len() {
            return Err(EngineError::Argument("oracle grid differs from the invariant grid".into()));
        }
        for psi0 in states {
            let e0 = expectation(&inv.matrices[0], psi0);
            for (k, uk) in u.matrices.iter().enumerate() {
                let psi = uk * psi0;
                drift[k] = f64::max(drift[k], (expectation(&inv.matrices[k], &psi) - e0).abs());
            }
        }
    }
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(ResidualReport {
        max_di_residual: max(&di),
        max_expectation_drift: max(&drift),
        max_hermitian_defect: inv.matrices.iter().map(hermitian_defect).fold(0.0, f64::max),
        analytic_derivative: inv.has_analytic_derivative(),
        times,
        di_residual: di,
        expectation_drift: drift,
    })
}

/// Residual of the DI equation on the grid and expectation drift of the
/// given states under the Schrödinger oracle.
pub fn verify_invariant(
    inv: &DynamicalInvariant,
    h: &HamiltonianSpec,
    states: &[CVec],
    opts: &SolverOptions,
) -> Result<ResidualReport, EngineError> {
    let oracle = if states.is_empty() {
        None
    } else {
        Some(schrodinger_oracle(h, &inv.grid, opts)?)
    };
    verify_with_oracle(inv, h, oracle.as_ref(), states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn constant_h_is_its_own_invariant() {
        let h = HamiltonianSpec::constant([0.9, -0.3, 0.2, 0.4, 0.0, -0.7, 0.5, 0.6, 0.1]).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
        let hm = h.matrix_at(0.0).unwrap();
        let inv = DynamicalInvariant::new(grid, vec![hm; 51], InvariantKind::Full).unwrap();
        let psi = CVec::from_vec(vec![c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.5), c(0.5, 0.0)]);
        let r = verify_invariant(&inv, &h, &[psi], &SolverOptions::rk4(4)).unwrap();
        assert!(r.max_di_residual < 1e-12);
        assert!(r.max_expectation_drift < 1e-9);
    }

    #[test]
    fn trajectory_length_must_match_basis() {
        let traj = CoefficientTrajectory {
            grid: TimeGrid::new(0.0, 1.0, 1).unwrap(),
            labels: vec!["a".into(); 3],
            indices: None,
            vectors: vec![vec![1.0, 0.0, 0.0]; 2],
        };
        assert!(assemble_invariant(&traj, &GeneratorBasis::spinor(), InvariantKind::S).is_err());
        let ok = assemble_invariant(&traj.clone().with_indices(vec![0, 1, 2]), &GeneratorBasis::spinor(), InvariantKind::S)
            .unwrap();
        assert_eq!(ok.matrix(0), GeneratorBasis::spinor().matrix(0));
    }
}

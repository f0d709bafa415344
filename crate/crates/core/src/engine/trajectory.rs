use nalgebra::DVector;
use serde::Serialize;

use super::{at_time, integrate, EngineError, SolverOptions, TimeGrid};
use crate::lie::AdjointMatrix;

/// Sampled solution `g(t_k)` of `ġ = -iA g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTrajectory {
    pub grid: TimeGrid,
    /// Generator label of each component.
    pub labels: Vec<String>,
    /// Canonical spinor indices of the components, when the trajectory
    /// lives on a block of the full basis.
    pub indices: Option<Vec<usize>>,
    pub vectors: Vec<Vec<f64>>,
}

impl CoefficientTrajectory {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn with_indices(mut self, indices: Vec<usize>) -> Self {
        self.indices = Some(indices);
        self
    }

    pub fn norms(&self) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }

    /// `| |g(t_k)| − |g(0)| |` per grid point.
    pub fn norm_drift(&self) -> Vec<f64> {
        let n = self.norms();
        n.iter().map(|x| (x - n[0]).abs()).collect()
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift().into_iter().fold(0.0, f64::max)
    }

    /// The component with the given label along the trajectory.
    pub fn component(&self, label: &str) -> Option<Vec<f64>> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some(self.vectors.iter().map(|v| v[i]).collect())
    }

    /// Vectors zero-padded to the full 15-component spinor layout.
    pub fn embedded(&self) -> Result<Vec<[f64; 15]>, EngineError> {
        match &self.indices {
            Some(idx) => Ok(self
                .vectors
                .iter()
                .map(|v| {
                    let mut out = [0.0; 15];
                    for (x, &i) in v.iter().zip(idx) {
                        out[i] = *x;
                    }
                    out
                })
                .collect()),
            None if self.dim() == 15 => Ok(self
                .vectors
                .iter()
                .map(|v| std::array::from_fn(|i| v[i]))
                .collect()),
            None => Err(EngineError::Argument(format!(
                "{}-component trajectory has no embedding",
                self.dim()
            ))),
        }
    }
}

/// Integrates the adjoint equation from `g0` over `grid`.
pub fn solve_adjoint(
    a: &AdjointMatrix,
    g0: &[f64],
    grid: &TimeGrid,
    opts: &SolverOptions,
) -> Result<CoefficientTrajectory, EngineError> {
    if g0.len() != a.dim() {
        return Err(EngineError::Argument(format!(
            "initial vector has {} components, block has {}",
            g0.len(),
            a.dim()
        )));
    }
    if g0.iter().all(|x| *x == 0.0) {
        return Err(EngineError::Argument("initial vector is zero".into()));
    }
    let rhs = |t: f64, g: &DVector<f64>| -> Result<DVector<f64>, EngineError> {
        let m = a.real_generator_at(t).map_err(at_time(t))?;
        Ok(-(m * g))
    };
    let states = integrate(rhs, DVector::from_row_slice(g0), grid, opts)?;
    Ok(CoefficientTrajectory {
        grid: *grid,
        labels: a.labels().to_vec(),
        indices: None,
        vectors: states.into_iter().map(|v| v.iter().copied().collect()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{adjoint_of_matrix, GeneratorBasis};
    use crate::linalg::pauli;

    #[test]
    fn sigma_z_rotation_matches_exponential() {
        let a = AdjointMatrix::constant(
            adjoint_of_matrix(&pauli(3), &GeneratorBasis::su2()),
            vec!["X".into(), "Y".into(), "Z".into()],
        );
        let grid = TimeGrid::new(0.0, 3.0, 3000).unwrap();
        let traj = solve_adjoint(&a, &[1.0, 0.0, 0.0], &grid, &SolverOptions::default()).unwrap();
        for (k, v) in traj.vectors.iter().enumerate() {
            let t = grid.time(k);
            // ġ = -iA g rotates the x-y plane at angular rate 2
            let expect = [(2.0 * t).cos(), (2.0 * t).sin(), 0.0];
            for (x, y) in v.iter().zip(expect) {
                assert!((x - y).abs() < 1e-9);
            }
        }
        assert!(traj.max_norm_drift() < 1e-9);
    }

    #[test]
    fn zero_generator_keeps_g() {
        let a = AdjointMatrix::constant(crate::linalg::CMat::zeros(2, 2), vec!["a".into(), "b".into()]);
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let traj = solve_adjoint(&a, &[0.3, -0.4], &grid, &SolverOptions::default()).unwrap();
        assert!(traj.vectors.iter().all(|v| v == &vec![0.3, -0.4]));
        assert!(solve_adjoint(&a, &[0.0, 0.0], &grid, &SolverOptions::default()).is_err());
        assert!(solve_adjoint(&a, &[1.0], &grid, &SolverOptions::default()).is_err());
    }
}

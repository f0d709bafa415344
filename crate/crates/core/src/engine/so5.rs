use serde::Serialize;

use super::{solve_adjoint, CoefficientTrajectory, EngineError, SolverOptions, TimeGrid};
use crate::lie::{AdjointMatrix, GeneratorBasis, HamiltonianSpec};

/// The five-dimensional D-sector of the so(5) pattern.
pub const SO5_DTYPE_LABELS: [&str; 5] = ["X1", "Y1", "ZX", "ZY", "ZZ"];

const ALLOWED: [&str; 6] = ["J_x", "J_y", "h2_x", "h2_y", "h2_z", "h1_z"];

/// D-sector trajectory with the `g_X1² + g_Y1²` conservation check.
#[derive(Debug, Clone, Serialize)]
pub struct So5Report {
    pub trajectory: CoefficientTrajectory,
    /// `|g_X1² + g_Y1² − C|` per grid point, `C` taken at `t0`.
    pub conservation_drift: Vec<f64>,
    pub max_conservation_drift: f64,
    pub max_norm_drift: f64,
    /// Angular frequency of `g_X1` from its zero crossings, when it crosses
    /// at least twice.
    pub oscillation_rate: Option<f64>,
    /// `J_x` and `J_y` both identically zero.
    pub decoupled: bool,
}

fn crossing_rate(times: &[f64], x: &[f64]) -> Option<f64> {
    let mut crossings = Vec::new();
    for k in 1..x.len() {
        let (a, b) = (x[k - 1], x[k]);
        if a == 0.0 && k == 1 {
            crossings.push(times[0]);
        }
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            crossings.push(times[k - 1] + (times[k] - times[k - 1]) * a / (a - b));
        }
    }
    crossings.dedup();
    if crossings.len() < 2 {
        return None;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    Some(std::f64::consts::PI * (crossings.len() - 1) as f64 / span)
}

/// Integrates the D-sector of a so(5) Hamiltonian from `g0`, ordered as
/// [`SO5_DTYPE_LABELS`].
pub fn so5_dtype_solve(
    h: &HamiltonianSpec,
    g0: &[f64],
    grid: &TimeGrid,
    opts: &SolverOptions,
) -> Result<So5Report, EngineError> {
    let offending: Vec<String> = h
        .active_names()
        .into_iter()
        .filter(|n| !ALLOWED.contains(n))
        .map(String::from)
        .collect();
    if !offending.is_empty() {
        return Err(EngineError::CaseMismatch {
            allowed: ALLOWED.join(", "),
            offending,
        });
    }
    let spinor = GeneratorBasis::spinor();
    let indices: Vec<usize> = SO5_DTYPE_LABELS
        .iter()
        .map(|l| spinor.index_of(l).expect("spinor label"))
        .collect();
    let block = AdjointMatrix::spinor(h).restrict(&indices);
    let trajectory = solve_adjoint(&block, g0, grid, opts)?.with_indices(indices);
    let radius: Vec<f64> = trajectory.vectors.iter().map(|v| v[0] * v[0] + v[1] * v[1]).collect();
    let conservation_drift: Vec<f64> = radius.iter().map(|r| (r - radius[0]).abs()).collect();
    let x1 = trajectory.component("X1").expect("X1 is in the block");
    let decoupled = ["J_x", "J_y"]
        .iter()
        .all(|n| h.coefficient(n).map(|c| c.is_identically_zero()).unwrap_or(true));
    Ok(So5Report {
        max_conservation_drift: conservation_drift.iter().copied().fold(0.0, f64::max),
        max_norm_drift: trajectory.max_norm_drift(),
        oscillation_rate: crossing_rate(&trajectory.times(), &x1),
        conservation_drift,
        decoupled,
        trajectory,
    })
}

use nalgebra::DVector;
use num_complex::Complex64;

use super::{
    differentiate, DynamicalInvariant, EngineError, EvolutionOperator, PropagatorSource, TimeGrid,
};
use crate::lie::HamiltonianSpec;
use crate::linalg::{frobenius, hermitian_eigen, identity, CMat, CVec, I};

/// Smallest eigenvalue gap accepted before a spectrum counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Eigenframe of an invariant along a grid, with Lewis–Riesenfeld phases.
#[derive(Debug, Clone, PartialEq)]
pub struct LRSpectrum {
    pub grid: TimeGrid,
    /// `eigenvalues[k][n]`
    pub eigenvalues: Vec<Vec<f64>>,
    /// Column `n` of `frames[k]` is `φ_n(t_k)`.
    pub frames: Vec<CMat>,
    /// `phases[k][n] = α_n(t_k)`
    pub phases: Vec<Vec<f64>>,
    /// `c_n = ⟨φ_n(0)|ψ(0)⟩` when an initial state was supplied.
    pub overlaps: Option<Vec<Complex64>>,
}

impl LRSpectrum {
    pub fn dim(&self) -> usize {
        self.frames[0].nrows()
    }

    pub fn states(&self) -> usize {
        self.frames[0].ncols()
    }

    pub fn eigenvector(&self, k: usize, n: usize) -> CVec {
        self.frames[k].column(n).into_owned()
    }

    /// Largest `‖Φ†Φ − 1‖_F` over the grid.
    pub fn max_frame_defect(&self) -> f64 {
        let m = self.states();
        self.frames
            .iter()
            .map(|f| frobenius(&(f.adjoint() * f - identity(m))))
            .fold(0.0, f64::max)
    }

    /// `Σ c_n e^{iα_n} |φ_n(t_k)⟩` for each grid point.
    pub fn evolve_state(&self, psi0: &CVec) -> Vec<CVec> {
        let c = self.frames[0].adjoint() * psi0;
        self.frames
            .iter()
            .zip(&self.phases)
            .map(|(f, a)| {
                let weighted = CVec::from_iterator(
                    c.len(),
                    c.iter().zip(a).map(|(cn, an)| cn * Complex64::from_polar(1.0, *an)),
                );
                f * weighted
            })
            .collect()
    }

    /// `max_{n,k} ‖U(t_k)|φ_n(0)⟩ − e^{iα_n(t_k)}|φ_n(t_k)⟩‖`.
    pub fn transport_defect(&self, u: &EvolutionOperator) -> Result<f64, EngineError> {
        if u.matrices.len() != self.frames.len() {
            return Err(EngineError::Argument("propagator grid differs from the spectrum grid".into()));
        }
        let mut worst: f64 = 0.0;
        for (k, uk) in u.matrices.iter().enumerate() {
            for n in 0..self.states() {
                let moved = uk * self.frames[0].column(n);
                let lr = self.frames[k].column(n) * Complex64::from_polar(1.0, self.phases[k][n]);
                worst = worst.max((moved - lr).norm());
            }
        }
        Ok(worst)
    }
}

fn min_gap(values: &[f64]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let gap = (values[i] - values[j]).abs();
            if best.map_or(true, |b| gap < b.2) {
                best = Some((i, j, gap));
            }
        }
    }
    best
}

/// Reorders the columns of `frame` so each matches the column of `prev`
/// it overlaps most.
fn match_columns(prev: &CMat, frame: &CMat, values: &[f64]) -> (CMat, Vec<f64>) {
    let m = frame.ncols();
    let mut used = vec![false; m];
    let mut out = frame.clone();
    let mut vals = values.to_vec();
    for n in 0..m {
        let best = (0..m)
            .filter(|j| !used[*j])
            .max_by(|&a, &b| {
                let oa = prev.column(n).dotc(&frame.column(a)).norm();
                let ob = prev.column(n).dotc(&frame.column(b)).norm();
                oa.total_cmp(&ob)
            })
            .expect("a free column remains");
        used[best] = true;
        out.set_column(n, &frame.column(best));
        vals[n] = values[best];
    }
    (out, vals)
}

/// Diagonalizes the invariant at every grid point and builds its LR
/// spectrum. Fails on eigenvalues closer than [`DEGENERACY_TOL`].
pub fn lr_spectrum(
    inv: &DynamicalInvariant,
    h: &HamiltonianSpec,
    psi0: Option<&CVec>,
) -> Result<LRSpectrum, EngineError> {
    let times = inv.grid().times();
    let mut eigenvalues = Vec::with_capacity(times.len());
    let mut frames: Vec<CMat> = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let (vals, vecs) = hermitian_eigen(inv.matrix(k));
        if let Some((n, m, gap)) = min_gap(&vals) {
            if gap < DEGENERACY_TOL {
                return Err(EngineError::Degeneracy { t, n, m, gap });
            }
        }
        let (vecs, vals) = match frames.last() {
            Some(prev) => match_columns(prev, &vecs, &vals),
            None => (vecs, vals),
        };
        eigenvalues.push(vals);
        frames.push(vecs);
    }
    lr_spectrum_from_frames(*inv.grid(), eigenvalues, frames, h, psi0)
}

/// LR phases for a continuous eigenframe supplied by the caller, e.g. a
/// closed-form one that stays valid through degeneracies.
pub fn lr_spectrum_from_frames(
    grid: TimeGrid,
    eigenvalues: Vec<Vec<f64>>,
    mut frames: Vec<CMat>,
    h: &HamiltonianSpec,
    psi0: Option<&CVec>,
) -> Result<LRSpectrum, EngineError> {
    let len = grid.len();
    if frames.len() != len || eigenvalues.len() != len {
        return Err(EngineError::Argument(format!(
            "{} frames and {} eigenvalue rows for {len} grid points",
            frames.len(),
            eigenvalues.len()
        )));
    }
    let (dim, m) = frames[0].shape();
    for (k, f) in frames.iter().enumerate() {
        if f.shape() != (dim, m) || eigenvalues[k].len() != m {
            return Err(EngineError::Argument(format!("frame {k} has inconsistent shape")));
        }
        let defect = frobenius(&(f.adjoint() * f - identity(m)));
        if defect > 1e-8 {
            return Err(EngineError::Argument(format!(
                "frame {k} is not orthonormal (defect {defect:e})"
            )));
        }
    }

    // gauge: largest component real positive at t0, then continuity
    for n in 0..m {
        let big = frames[0]
            .column(n)
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(Complex64::new(1.0, 0.0));
        let rotated = frames[0].column(n) * (big.conj() / big.norm());
        frames[0].set_column(n, &rotated);
    }
    for k in 1..len {
        for n in 0..m {
            let o = frames[k - 1].column(n).dotc(&frames[k].column(n));
            if o.norm() < 1e-3 {
                return Err(EngineError::Argument(format!(
                    "eigenvector {n} jumps between grid points {} and {k}",
                    k - 1
                )));
            }
            let rotated = frames[k].column(n) * (o.conj() / o.norm());
            frames[k].set_column(n, &rotated);
        }
    }

    let times = grid.times();
    let deriv = differentiate(&frames, grid.dt());
    let mut integrand = vec![DVector::<f64>::zeros(m); len];
    for (k, &t) in times.iter().enumerate() {
        let hm = h.matrix_at(t)?;
        for n in 0..m {
            let phi = frames[k].column(n);
            let berry = (phi.dotc(&deriv[k].column(n)) * I).re;
            let energy = phi.dotc(&(&hm * phi)).re;
            integrand[k][n] = berry - energy;
        }
    }
    let slope = differentiate(&integrand, grid.dt());
    let dt = grid.dt();
    let mut phases = vec![vec![0.0; m]; len];
    for k in 1..len {
        for n in 0..m {
            let trap = 0.5 * dt * (integrand[k - 1][n] + integrand[k][n]);
            let corr = dt * dt / 12.0 * (slope[k][n] - slope[k - 1][n]);
            phases[k][n] = phases[k - 1][n] + trap - corr;
        }
    }
    let overlaps = psi0.map(|p| frames[0].adjoint() * p).map(|c| c.iter().copied().collect());
    Ok(LRSpectrum {
        grid,
        eigenvalues,
        frames,
        phases,
        overlaps,
    })
}

/// `U(t_k) = Σ_n e^{iα_n(t_k)} |φ_n(t_k)⟩⟨φ_n(0)|`.
pub fn evolution_operator(spec: &LRSpectrum) -> Result<EvolutionOperator, EngineError> {
    if spec.states() != spec.dim() {
        return Err(EngineError::Argument(format!(
            "frame has {} of {} states",
            spec.states(),
            spec.dim()
        )));
    }
    let back = spec.frames[0].adjoint();
    let matrices = spec
        .frames
        .iter()
        .zip(&spec.phases)
        .map(|(f, a)| {
            let d = CMat::from_diagonal(&CVec::from_iterator(
                a.len(),
                a.iter().map(|x| Complex64::from_polar(1.0, *x)),
            ));
            f * d * &back
        })
        .collect();
    Ok(EvolutionOperator {
        grid: spec.grid,
        matrices,
        source: PropagatorSource::Lr,
    })
}

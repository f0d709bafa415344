//! Closed-form invariant of the rotating-frame NMR Hamiltonian
//! `H = J XX + h_x 1X + B cos ωt 1Y + B sin ωt 1Z`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{
    lr_spectrum_from_frames, CoefficientTrajectory, DynamicalInvariant, EngineError, InvariantKind,
    LRSpectrum, TimeGrid, DEGENERACY_TOL,
};
use crate::lie::{Coefficient, HamiltonianSpec};
use crate::linalg::{c, hermitian_eigen, kron, pauli, re, CMat, CVec};
use crate::reduction::bloch_blocks;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmrParams {
    pub j: f64,
    pub hx: f64,
    pub b: f64,
    pub omega: f64,
}

impl NmrParams {
    pub fn new(j: f64, hx: f64, b: f64, omega: f64) -> Result<Self, EngineError> {
        let p = NmrParams { j, hx, b, omega };
        if [j, hx, b, omega].iter().any(|x| !x.is_finite()) {
            return Err(EngineError::Argument(format!("non-finite NMR parameter in {p:?}")));
        }
        Ok(p)
    }

    /// Drive period `2π/ω`; infinite for a static field.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega.abs()
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianSpec, EngineError> {
        let drive = |f: &str| Coefficient::parse(&format!("{:?}*{f}({:?}*t)", self.b, self.omega));
        let cos = drive("cos").map_err(|e| EngineError::Argument(e.to_string()))?;
        let sin = drive("sin").map_err(|e| EngineError::Argument(e.to_string()))?;
        Ok(HamiltonianSpec::from_named([
            ("J_x", Coefficient::Constant(self.j)),
            ("h2_x", Coefficient::Constant(self.hx)),
            ("h2_y", cos),
            ("h2_z", sin),
        ])?)
    }

    fn g(&self, sign: f64, t: f64) -> [f64; 3] {
        let (s, co) = (self.omega * t).sin_cos();
        [sign * self.j + self.hx - 0.5 * self.omega, self.b * co, self.b * s]
    }

    /// `g⁺(t) = (J + h_x − ω/2, B cos ωt, B sin ωt)`.
    pub fn g_plus(&self, t: f64) -> [f64; 3] {
        self.g(1.0, t)
    }

    /// `g⁻(t) = (−J + h_x − ω/2, B cos ωt, B sin ωt)`.
    pub fn g_minus(&self, t: f64) -> [f64; 3] {
        self.g(-1.0, t)
    }

    /// `ġ±`, the same for both blocks.
    pub fn g_dot(&self, t: f64) -> [f64; 3] {
        let (s, co) = (self.omega * t).sin_cos();
        [0.0, -self.b * self.omega * s, self.b * self.omega * co]
    }

    /// `I_S(t) = 2J XX + (2h_x − ω) 1X + 2B cos ωt 1Y + 2B sin ωt 1Z`.
    pub fn invariant_at(&self, t: f64) -> CMat {
        let (s, co) = (self.omega * t).sin_cos();
        let one = pauli(0);
        kron(&pauli(1), &pauli(1)) * re(2.0 * self.j)
            + kron(&one, &pauli(1)) * re(2.0 * self.hx - self.omega)
            + kron(&one, &pauli(2)) * re(2.0 * self.b * co)
            + kron(&one, &pauli(3)) * re(2.0 * self.b * s)
    }

    pub fn invariant_derivative_at(&self, t: f64) -> CMat {
        let (s, co) = (self.omega * t).sin_cos();
        let one = pauli(0);
        let w = 2.0 * self.b * self.omega;
        kron(&one, &pauli(2)) * re(-w * s) + kron(&one, &pauli(3)) * re(w * co)
    }
}

/// Closed-form solution of the NMR case on a grid.
#[derive(Debug, Clone)]
pub struct NmrSolution {
    pub params: NmrParams,
    pub hamiltonian: HamiltonianSpec,
    /// `I_S` with its analytic derivative.
    pub invariant: DynamicalInvariant,
    pub g_plus: CoefficientTrajectory,
    pub g_minus: CoefficientTrajectory,
}

impl NmrSolution {
    /// LR spectrum from the closed-form eigenvectors of `I_S/2`. The two
    /// blocks are diagonalized separately, so `g⁺ = g⁻` is handled.
    pub fn spectrum(&self, psi0: Option<&CVec>) -> Result<LRSpectrum, EngineError> {
        let grid = *self.invariant.grid();
        let mut values = Vec::with_capacity(grid.len());
        let mut frames = Vec::with_capacity(grid.len());
        for t in grid.times() {
            let es = nmr_eigensystem(self.params.g_plus(t), self.params.g_minus(t))?;
            values.push(es.eigenvalues.to_vec());
            frames.push(es.frame());
        }
        lr_spectrum_from_frames(grid, values, frames, &self.hamiltonian, psi0)
    }

    /// Largest `|ġ± + iA± g±|` over the grid, with the blocks taken from
    /// the Bloch reduction of the Hamiltonian and `ġ±` analytic.
    pub fn adjoint_residual(&self) -> Result<f64, EngineError> {
        let blocks = bloch_blocks(1, &self.hamiltonian)?;
        let mut worst: f64 = 0.0;
        for t in self.invariant.grid().times() {
            let gd = self.params.g_dot(t);
            for (block, g) in [(&blocks.a_plus, self.params.g_plus(t)), (&blocks.a_minus, self.params.g_minus(t))] {
                let m = block.real_generator_at(t)?;
                for r in 0..3 {
                    let rhs: f64 = (0..3).map(|c| m[(r, c)] * g[c]).sum();
                    worst = worst.max((gd[r] + rhs).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Samples the closed form of the NMR invariant on `grid`.
pub fn nmr_exact(params: NmrParams, grid: &TimeGrid) -> Result<NmrSolution, EngineError> {
    grid.validate()?;
    let hamiltonian = params.hamiltonian()?;
    let invariant = DynamicalInvariant::from_closed_form(
        *grid,
        InvariantKind::S,
        |t| params.invariant_at(t),
        |t| params.invariant_derivative_at(t),
    );
    let traj = |f: &dyn Fn(f64) -> [f64; 3]| CoefficientTrajectory {
        grid: *grid,
        labels: vec!["g1".into(), "g2".into(), "g3".into()],
        indices: None,
        vectors: grid.times().into_iter().map(|t| f(t).to_vec()).collect(),
    };
    Ok(NmrSolution {
        params,
        hamiltonian,
        invariant,
        g_plus: traj(&|t| params.g_plus(t)),
        g_minus: traj(&|t| params.g_minus(t)),
    })
}

/// Eigenpairs of `I_S/2` from the block closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct NmrEigensystem {
    /// `(+g⁺, −g⁺, +g⁻, −g⁻)` with `g± = |g±|`.
    pub eigenvalues: [f64; 4],
    /// Unit eigenvectors in the same order.
    pub eigenvectors: [CVec; 4],
    /// Two eigenvalues closer than the degeneracy tolerance.
    pub degenerate: bool,
    /// Largest `‖(I_S/2) v − λ v‖`.
    pub residual: f64,
}

impl NmrEigensystem {
    pub fn frame(&self) -> CMat {
        CMat::from_columns(&self.eigenvectors)
    }
}

fn norm3(g: &[f64; 3]) -> f64 {
    g.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn half_invariant(gp: &[f64; 3], gm: &[f64; 3]) -> CMat {
    // I_S/2 = Σ± (1 ± X) ⊗ (g±·σ) / 2
    let one = pauli(0);
    let block = |g: &[f64; 3]| pauli(1) * re(g[0]) + pauli(2) * re(g[1]) + pauli(3) * re(g[2]);
    (kron(&(&one + pauli(1)), &block(gp)) + kron(&(&one - pauli(1)), &block(gm))) * re(0.5)
}

/// The closed-form block eigenvectors, or a direct diagonalization of the
/// block when they vanish.
fn block_pair(g: &[f64; 3], a: [f64; 4], b: [f64; 4], m: &CMat) -> [(f64, CVec); 2] {
    let n = norm3(g);
    let av = CVec::from_iterator(4, a.iter().map(|x| re(*x)));
    let bv = CVec::from_iterator(4, b.iter().map(|x| re(*x)));
    let lead = c(0.0, 1.0) * c(g[1], g[0]);
    let raw: Vec<CVec> = [1.0, -1.0].iter().map(|s| &av * lead + &bv * re(g[2] + s * n)).collect();
    let mut pairs: Vec<(f64, CVec)> = Vec::with_capacity(2);
    if raw.iter().all(|v| v.norm() > 1e-6 * (1.0 + n)) {
        for v in raw {
            let v = v.normalize();
            let lambda = v.dotc(&(m * &v)).re;
            pairs.push((lambda, v));
        }
    } else {
        let basis = CMat::from_columns(&[av.normalize(), bv.normalize()]);
        let small = basis.adjoint() * m * &basis;
        let (vals, vecs) = hermitian_eigen(&small);
        for (k, v) in vals.iter().enumerate() {
            pairs.push((*v, &basis * vecs.column(k)));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let second = pairs.pop().expect("two pairs");
    let first = pairs.pop().expect("two pairs");
    [first, second]
}

/// Eigenvalues and unit eigenvectors of `I_S/2` at one time.
pub fn nmr_eigensystem(g_plus: [f64; 3], g_minus: [f64; 3]) -> Result<NmrEigensystem, EngineError> {
    let (np, nm) = (norm3(&g_plus), norm3(&g_minus));
    if np < DEGENERACY_TOL || nm < DEGENERACY_TOL {
        return Err(EngineError::Degenerate(format!(
            "|g+| = {np:e}, |g-| = {nm:e}; both blocks need a non-zero vector"
        )));
    }
    let m = half_invariant(&g_plus, &g_minus);
    let [p0, p1] = block_pair(&g_plus, [1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0], &m);
    let [m0, m1] = block_pair(&g_minus, [-1.0, 0.0, 1.0, 0.0], [0.0, -1.0, 0.0, 1.0], &m);
    let eigenvalues = [np, -np, nm, -nm];
    let eigenvectors = [p0.1, p1.1, m0.1, m1.1];
    let residual = eigenvectors
        .iter()
        .zip(eigenvalues)
        .map(|(v, l)| (&m * v - v * re(l)).norm())
        .fold(0.0, f64::max);
    let degenerate = (np - nm).abs() < DEGENERACY_TOL;
    Ok(NmrEigensystem {
        eigenvalues,
        eigenvectors,
        degenerate,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{evolution_operator, schrodinger_oracle, solve_adjoint, verify_invariant, SolverOptions};
    use crate::linalg::{frobenius, identity};

    fn params() -> NmrParams {
        NmrParams::new(0.5, 1.0, 0.4, 1.0).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let p = params();
        assert_eq!(p.g_plus(0.0), [1.0, 0.4, 0.0]);
        let t = 0.37;
        let shifted = p.g_plus(t + p.period());
        for (a, b) in shifted.iter().zip(p.g_plus(t)) {
            assert!((a - b).abs() < 1e-12);
        }
        let expect = (1.0f64 + 0.16).sqrt();
        for k in 0..50 {
            assert!((norm3(&p.g_plus(0.3 * k as f64)) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn half_invariant_matches_i_s() {
        let p = params();
        for t in [0.0, 0.4, 2.2] {
            let d = p.invariant_at(t) * re(0.5) - half_invariant(&p.g_plus(t), &p.g_minus(t));
            assert!(frobenius(&d) < 1e-14);
        }
    }

    #[test]
    fn exact_invariant_has_tiny_residual() {
        let p = params();
        let grid = TimeGrid::new(0.0, p.period(), 200).unwrap();
        let sol = nmr_exact(p, &grid).unwrap();
        let r = verify_invariant(&sol.invariant, &sol.hamiltonian, &[], &SolverOptions::default()).unwrap();
        assert!(r.analytic_derivative);
        assert!(r.max_di_residual < 1e-12, "{}", r.max_di_residual);
        assert!(sol.adjoint_residual().unwrap() < 1e-12);
    }

    #[test]
    fn bloch_block_reproduces_g_plus() {
        let p = params();
        let h = p.hamiltonian().unwrap();
        let blocks = bloch_blocks(1, &h).unwrap();
        let grid = TimeGrid::new(0.0, p.period(), 2000).unwrap();
        let traj = solve_adjoint(&blocks.a_plus, &p.g_plus(0.0), &grid, &SolverOptions::default()).unwrap();
        for (k, v) in traj.vectors.iter().enumerate() {
            let g = p.g_plus(grid.time(k));
            for (a, b) in v.iter().zip(g) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn eigensystem_order_and_residual() {
        let p = params();
        let es = nmr_eigensystem(p.g_plus(0.3), p.g_minus(0.3)).unwrap();
        let np = norm3(&p.g_plus(0.3));
        let nm = norm3(&p.g_minus(0.3));
        assert_eq!(es.eigenvalues, [np, -np, nm, -nm]);
        assert!(es.residual < 1e-10);
        assert!(!es.degenerate);
        assert!(frobenius(&(es.frame().adjoint() * es.frame() - identity(4))) < 1e-12);
    }

    #[test]
    fn zero_coupling_is_flagged() {
        let p = NmrParams::new(0.0, 1.0, 0.4, 1.0).unwrap();
        let es = nmr_eigensystem(p.g_plus(0.1), p.g_minus(0.1)).unwrap();
        assert!(es.degenerate);
        assert!(es.residual < 1e-10);
        assert!(nmr_eigensystem([0.0; 3], [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn aligned_field_falls_back_to_block_diagonalization() {
        // g1 = g2 = 0 makes one closed-form vector vanish
        let es = nmr_eigensystem([0.0, 0.0, 0.7], [0.0, 0.0, -0.2]).unwrap();
        assert!(es.residual < 1e-12);
    }

    #[test]
    fn lr_propagator_matches_oracle_over_a_period() {
        let p = params();
        let grid = TimeGrid::new(0.0, p.period(), 2000).unwrap();
        let sol = nmr_exact(p, &grid).unwrap();
        let spec = sol.spectrum(None).unwrap();
        let u = evolution_operator(&spec).unwrap();
        let oracle = schrodinger_oracle(&sol.hamiltonian, &grid, &SolverOptions::default()).unwrap();
        assert!(u.max_distance(&oracle) < 1e-6, "{}", u.max_distance(&oracle));
    }
}

//! Inverse-engineered two-level inversion: choose `I(t)` by its angles
//! `γ(t)`, `β(t)` and read off the Hamiltonian that keeps it invariant.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{propagate, EngineError, SolverOptions, TimeGrid};
use crate::linalg::{c, commutator, frobenius, pauli, re, CMat, CVec, I};

/// Polynomial angles of the invariant
/// `I = (Ω₀/2)(sin γ cos β σx − sin γ sin β σy + cos γ σz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IecAnsatz {
    pub omega0: f64,
    /// `γ(t) = Σ c_k t^k`, cubic.
    pub gamma_poly: [f64; 4],
    /// `β(t) = Σ b_k t^k`, quartic.
    pub beta_poly: [f64; 5],
    pub t_final: f64,
}

fn poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn poly_dot(coeffs: &[f64], t: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c)
}

impl IecAnsatz {
    /// `γ` from `ε` to `π − ε` and `β` from `π/2` back to `π/2` through
    /// `π/2 + δ` at mid-time, all with vanishing end slopes.
    pub fn boundary(epsilon: f64, delta: f64, t_final: f64, omega0: f64) -> Result<Self, EngineError> {
        let tf = t_final;
        let span = PI - 2.0 * epsilon;
        let a = IecAnsatz {
            omega0,
            gamma_poly: [epsilon, 0.0, 3.0 * span / tf.powi(2), -2.0 * span / tf.powi(3)],
            beta_poly: [
                PI / 2.0,
                0.0,
                16.0 * delta / tf.powi(2),
                -32.0 * delta / tf.powi(3),
                16.0 * delta / tf.powi(4),
            ],
            t_final,
        };
        a.validate()?;
        Ok(a)
    }

    /// `ε = 0.001`, `δ = 0.2`, `Ω₀ = 1`.
    pub fn default_for(t_final: f64) -> Result<Self, EngineError> {
        Self::boundary(0.001, 0.2, t_final, 1.0)
    }

    pub fn gamma(&self, t: f64) -> (f64, f64) {
        (poly(&self.gamma_poly, t), poly_dot(&self.gamma_poly, t))
    }

    pub fn beta(&self, t: f64) -> (f64, f64) {
        (poly(&self.beta_poly, t), poly_dot(&self.beta_poly, t))
    }

    /// Checks the scalars and that `sin β`, `sin γ` stay away from zero.
    pub fn validate(&self) -> Result<(), EngineError> {
        let finite = self.gamma_poly.iter().chain(&self.beta_poly).all(|x| x.is_finite());
        if !finite || !(self.omega0 > 0.0) || !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(EngineError::Argument(format!("invalid ansatz {self:?}")));
        }
        let n = 4096;
        for k in 0..=n {
            let t = self.t_final * k as f64 / n as f64;
            self.check_at(t)?;
        }
        Ok(())
    }

    fn check_at(&self, t: f64) -> Result<(), EngineError> {
        let (g, _) = self.gamma(t);
        let (b, _) = self.beta(t);
        if b.sin().abs() < 1e-8 {
            return Err(EngineError::Singularity { t, what: "sin β".into() });
        }
        if g.sin().abs() < 1e-8 {
            return Err(EngineError::Singularity { t, what: "sin γ".into() });
        }
        Ok(())
    }

    fn axis(&self, t: f64) -> ([f64; 3], [f64; 3]) {
        let (g, gd) = self.gamma(t);
        let (b, bd) = self.beta(t);
        let (sg, cg) = g.sin_cos();
        let (sb, cb) = b.sin_cos();
        let n = [sg * cb, -sg * sb, cg];
        let nd = [
            cg * cb * gd - sg * sb * bd,
            -cg * sb * gd - sg * cb * bd,
            -sg * gd,
        ];
        (n, nd)
    }

    fn spin(v: [f64; 3]) -> CMat {
        pauli(1) * re(v[0]) + pauli(2) * re(v[1]) + pauli(3) * re(v[2])
    }

    pub fn invariant_at(&self, t: f64) -> CMat {
        Self::spin(self.axis(t).0) * re(0.5 * self.omega0)
    }

    pub fn invariant_derivative_at(&self, t: f64) -> CMat {
        Self::spin(self.axis(t).1) * re(0.5 * self.omega0)
    }

    /// `H = ½[(γ̇/sin β) σx + ((γ̇/sin β) cot γ cos β − β̇) σz]`.
    pub fn hamiltonian_at(&self, t: f64) -> Result<CMat, EngineError> {
        self.check_at(t)?;
        let (g, gd) = self.gamma(t);
        let (b, bd) = self.beta(t);
        let x = gd / b.sin();
        let z = x * g.cos() / g.sin() * b.cos() - bd;
        Ok((pauli(1) * re(x) + pauli(3) * re(z)) * re(0.5))
    }
}

/// Outcome of the inversion run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IecResult {
    /// `|⟨1|ψ(t_f)⟩|²` starting from `|0⟩`.
    pub inversion_fidelity: f64,
    /// `‖[H(0), I(0)]‖_F` and `‖[H(t_f), I(t_f)]‖_F`.
    pub boundary_commutators: [f64; 2],
    /// Largest `‖İ + i[H, I]‖_F` on the grid, `İ` analytic.
    pub max_di_residual: f64,
    pub max_unitarity_drift: f64,
    pub final_state: [[f64; 2]; 2],
}

/// Builds `H(t)` from the ansatz and checks the inversion with a direct
/// two-level integration over `steps` grid intervals.
pub fn iec_two_level(ansatz: &IecAnsatz, steps: usize, opts: &SolverOptions) -> Result<IecResult, EngineError> {
    ansatz.validate()?;
    let grid = TimeGrid::new(0.0, ansatz.t_final, steps)?;
    let mut residual: f64 = 0.0;
    for t in grid.times() {
        let h = ansatz.hamiltonian_at(t)?;
        let r = ansatz.invariant_derivative_at(t) + commutator(&h, &ansatz.invariant_at(t)) * I;
        residual = residual.max(frobenius(&r));
    }
    let boundary = |t: f64| -> Result<f64, EngineError> {
        Ok(frobenius(&commutator(&ansatz.hamiltonian_at(t)?, &ansatz.invariant_at(t))))
    };
    let u = propagate(|t| ansatz.hamiltonian_at(t), 2, &grid, opts)?;
    let psi0 = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    let psi = u.matrices.last().expect("non-empty grid") * psi0;
    Ok(IecResult {
        inversion_fidelity: psi[1].norm_sqr(),
        boundary_commutators: [boundary(0.0)?, boundary(ansatz.t_final)?],
        max_di_residual: residual,
        max_unitarity_drift: u.max_unitarity_drift(),
        final_state: [[psi[0].re, psi[0].im], [psi[1].re, psi[1].im]],
    })
}

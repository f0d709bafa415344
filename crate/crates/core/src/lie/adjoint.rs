use std::fmt;
use std::sync::Arc;

use super::{structure_constants, GeneratorBasis, HamiltonianSpec, LieError, StructureConstants};
use crate::linalg::{commutator, CMat, RMat, I};

/// Antisymmetry / reality tolerance for iA.
const ADJOINT_TOL: f64 = 1e-12;

type AdjFn = dyn Fn(f64) -> Result<CMat, LieError> + Send + Sync;

/// Time-parameterized adjoint matrix `A(t) = ad(H(t))` on an ordered set of
/// generators. Column j holds the expansion of `[H, T_j]`, so the
/// invariant's coefficients obey `ġ = -iA g`.
#[derive(Clone)]
pub struct AdjointMatrix {
    dim: usize,
    labels: Vec<String>,
    eval: Arc<AdjFn>,
}

impl fmt::Debug for AdjointMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdjointMatrix")
            .field("dim", &self.dim)
            .field("labels", &self.labels)
            .finish_non_exhaustive()
    }
}

impl AdjointMatrix {
    pub fn from_fn<F>(dim: usize, labels: Vec<String>, f: F) -> Self
    where
        F: Fn(f64) -> Result<CMat, LieError> + Send + Sync + 'static,
    {
        assert_eq!(labels.len(), dim, "one label per row");
        AdjointMatrix {
            dim,
            labels,
            eval: Arc::new(f),
        }
    }

    pub fn constant(m: CMat, labels: Vec<String>) -> Self {
        let dim = m.nrows();
        Self::from_fn(dim, labels, move |_| Ok(m.clone()))
    }

    /// `ad(H(t))` over a closed 4×4 basis, evaluated through the structure
    /// constants of that basis.
    pub fn from_hamiltonian(h: &HamiltonianSpec, basis: &GeneratorBasis) -> Result<Self, LieError> {
        let sc = structure_constants(basis)?;
        // map spinor coefficients into the target basis once
        let spinor = GeneratorBasis::spinor();
        let n = basis.len();
        let mut proj = RMat::zeros(n, 15);
        for i in 0..15 {
            let (coeffs, residual) = basis.project_with_residual(spinor.matrix(i));
            if residual > 1e-10 && h.support().contains(&i) {
                return Err(LieError::OutsideSpan(spinor.label(i).to_string()));
            }
            for (k, c) in coeffs.iter().enumerate() {
                proj[(k, i)] = c.re;
            }
        }
        let h = h.clone();
        let table: Vec<_> = sc.entries().collect();
        Ok(Self::from_fn(n, basis.labels(), move |t| {
            let v = h.spinor_vector_at(t)?;
            let hb = &proj * nalgebra::DVector::from_row_slice(&v);
            let mut a = CMat::zeros(n, n);
            for &((i, j, k), f) in &table {
                if hb[i] != 0.0 {
                    a[(k, j)] += I * (hb[i] * f);
                }
            }
            Ok(a)
        }))
    }

    /// Spinor-basis shortcut for [`from_hamiltonian`](Self::from_hamiltonian).
    pub fn spinor(h: &HamiltonianSpec) -> Self {
        Self::from_hamiltonian(h, &GeneratorBasis::spinor()).expect("spinor basis is closed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn at(&self, t: f64) -> Result<CMat, LieError> {
        (self.eval)(t)
    }

    /// The real antisymmetric generator `M = iA(t)`, so that `ġ = -M g`.
    pub fn real_generator_at(&self, t: f64) -> Result<RMat, LieError> {
        let a = self.at(t)?;
        let ia = a.map(|z| z * I);
        let mut defect = ia.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let m = ia.map(|z| z.re);
        defect = defect.max((&m + m.transpose()).amax());
        if defect > ADJOINT_TOL * m.amax().max(1.0) {
            return Err(LieError::NotAntisymmetric { t, defect });
        }
        Ok(m)
    }

    /// The block on the given rows and columns, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> AdjointMatrix {
        let idx = indices.to_vec();
        let labels = idx.iter().map(|&i| self.labels[i].clone()).collect();
        let inner = self.clone();
        Self::from_fn(idx.len(), labels, move |t| {
            let a = inner.at(t)?;
            Ok(CMat::from_fn(idx.len(), idx.len(), |r, c| a[(idx[r], idx[c])]))
        })
    }

    /// `S A S⁻¹` for a time-independent `S`.
    pub fn transformed(&self, s: RMat, s_inv: RMat, labels: Vec<String>) -> AdjointMatrix {
        let inner = self.clone();
        let sc = s.map(crate::linalg::re);
        let sic = s_inv.map(crate::linalg::re);
        Self::from_fn(s.nrows(), labels, move |t| Ok(&sc * inner.at(t)? * &sic))
    }
}

/// `ad(H)` from the expansion coefficients of H over the basis behind `sc`.
pub fn adjoint_from_coefficients(coeffs: &[f64], sc: &StructureConstants) -> CMat {
    let n = sc.dim();
    let mut a = CMat::zeros(n, n);
    for ((i, j, k), f) in sc.entries() {
        if coeffs[i] != 0.0 {
            a[(k, j)] += I * (coeffs[i] * f);
        }
    }
    a
}

/// `ad(H)` by projecting every commutator `[H, T_j]` back on the basis.
/// Independent of the structure-constant route and used to cross-check it.
pub fn adjoint_of_matrix(h: &CMat, basis: &GeneratorBasis) -> CMat {
    let n = basis.len();
    let mut a = CMat::zeros(n, n);
    for j in 0..n {
        let col = basis.project(&commutator(h, basis.matrix(j)));
        for (k, v) in col.into_iter().enumerate() {
            a[(k, j)] = v;
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{Coefficient, HamiltonianSpec};
    use crate::linalg::{c, frobenius, max_abs, pauli};
    use proptest::prelude::*;

    #[test]
    fn su2_adjoint_of_sigma_z() {
        let b = GeneratorBasis::su2();
        let a = adjoint_of_matrix(&pauli(3), &b);
        let z = c(0.0, 0.0);
        let expected = CMat::from_row_slice(3, 3, &[z, c(0.0, -2.0), z, c(0.0, 2.0), z, z, z, z, z]);
        assert!(frobenius(&(a - expected)) == 0.0);
    }

    #[test]
    fn zero_hamiltonian_gives_zero() {
        let b = GeneratorBasis::spinor();
        assert_eq!(max_abs(&adjoint_of_matrix(&CMat::zeros(4, 4), &b)), 0.0);
    }

    #[test]
    fn structure_route_matches_brute_force() {
        let h = HamiltonianSpec::from_named([
            ("J_x", Coefficient::parse("1+0.3*sin(t)").unwrap()),
            ("J_z", (-0.4).into()),
            ("h1_y", 0.7.into()),
            ("h2_x", Coefficient::parse("cos(2*t)").unwrap()),
            ("h2_z", 0.2.into()),
        ])
        .unwrap();
        for basis in [GeneratorBasis::spinor(), GeneratorBasis::lambda()] {
            let a = AdjointMatrix::from_hamiltonian(&h, &basis).unwrap();
            for t in [0.0, 0.37, 1.9] {
                let brute = adjoint_of_matrix(&h.matrix_at(t).unwrap(), &basis);
                assert!(frobenius(&(a.at(t).unwrap() - brute)) < 1e-12);
                a.real_generator_at(t).unwrap();
            }
        }
    }

    #[test]
    fn restrict_and_transform() {
        let h = HamiltonianSpec::constant([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3, 0.2, 0.1]).unwrap();
        let a = AdjointMatrix::spinor(&h);
        let r = a.restrict(&[0, 1, 2]);
        assert_eq!(r.labels(), &["1X", "1Y", "1Z"]);
        let full = a.at(0.0).unwrap();
        assert_eq!(r.at(0.0).unwrap()[(1, 2)], full[(1, 2)]);
        let p = RMat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let t = r.transformed(p.clone(), p, vec!["a".into(), "b".into(), "c".into()]);
        assert_eq!(t.at(0.0).unwrap()[(0, 2)], full[(1, 2)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn ia_is_real_antisymmetric(v in prop::array::uniform9(-3.0f64..3.0), t in 0.0f64..10.0) {
            let mut v = v;
            v[0] += 3.5;
            let h = HamiltonianSpec::constant(v).unwrap();
            let a = AdjointMatrix::spinor(&h);
            let ia = a.at(t).unwrap().map(|z| z * I);
            for z in ia.iter() {
                prop_assert!(z.im.abs() < 1e-12);
            }
            let m = ia.map(|z| z.re);
            prop_assert!((&m + m.transpose()).amax() < 1e-12);
        }

        #[test]
        fn adjoint_is_linear(
            v1 in prop::array::uniform9(-2.0f64..2.0),
            v2 in prop::array::uniform9(-2.0f64..2.0),
            alpha in -2.0f64..2.0,
            beta in -2.0f64..2.0,
        ) {
            let b = GeneratorBasis::spinor();
            let h1 = HamiltonianSpec::new_uncoupled(v1.map(Coefficient::Constant)).matrix_at(0.0).unwrap();
            let h2 = HamiltonianSpec::new_uncoupled(v2.map(Coefficient::Constant)).matrix_at(0.0).unwrap();
            let lhs = adjoint_of_matrix(&(&h1 * c(alpha, 0.0) + &h2 * c(beta, 0.0)), &b);
            let rhs = adjoint_of_matrix(&h1, &b) * c(alpha, 0.0) + adjoint_of_matrix(&h2, &b) * c(beta, 0.0);
            prop_assert!(frobenius(&(lhs - rhs)) < 1e-12);
        }
    }
}

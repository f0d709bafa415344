//! Time-independent basis changes of the adjoint equation and the reduction
//! of the three so(4)⊕u(1) S-sectors to pairs of Bloch equations.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::lie::{
    adjoint_of_matrix, AdjointMatrix, GeneratorBasis, HamiltonianSpec, LieError, SpinorLabel,
};
use crate::linalg::{commutator, frobenius, pauli, re, trace_product, CMat, RMat, I};

/// Projection residual above which a generator is outside the old span.
pub const SPAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("new generator {index} lies outside the span of the old basis (residual {residual:e})")]
    Span { index: usize, residual: f64 },
    #[error("basis change is singular")]
    Singular,
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("case {case} allows only {allowed}; found non-zero {offending:?}")]
    CaseMismatch {
        case: u8,
        allowed: String,
        offending: Vec<String>,
    },
    #[error("unknown reduction case {0}")]
    UnknownCase(u8),
    #[error("block is not an su(2) adjoint element (residual {residual:e})")]
    NotSu2 { residual: f64 },
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// `Σ'_i = Σ_j S_ij T_j` with `S_ij = tr(Σ'_i T_j) / tr(T_j T_j)`.
/// Coefficient vectors transform as `g' = S g` and `A' = S A S⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisChange {
    matrix: RMat,
    inverse: RMat,
    source_labels: Vec<String>,
    target_labels: Vec<String>,
}

impl BasisChange {
    pub fn matrix(&self) -> &RMat {
        &self.matrix
    }

    pub fn inverse(&self) -> &RMat {
        &self.inverse
    }

    pub fn source_labels(&self) -> &[String] {
        &self.source_labels
    }

    pub fn target_labels(&self) -> &[String] {
        &self.target_labels
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        (&self.matrix * nalgebra::DVector::from_row_slice(g)).iter().copied().collect()
    }

    pub fn pull_back(&self, g: &[f64]) -> Vec<f64> {
        (&self.inverse * nalgebra::DVector::from_row_slice(g)).iter().copied().collect()
    }

    /// `‖S S⁻¹ − 1‖_F`.
    pub fn inverse_defect(&self) -> f64 {
        let n = self.dim();
        (&self.matrix * &self.inverse - RMat::identity(n, n)).norm()
    }
}

/// S for `new` generators (matrices with labels) against `old`.
pub fn compute_transform(
    new: &[(String, CMat)],
    old: &GeneratorBasis,
) -> Result<BasisChange, ReductionError> {
    if new.len() != old.len() {
        return Err(ReductionError::Argument(format!(
            "{} new generators for a basis of {}",
            new.len(),
            old.len()
        )));
    }
    let n = old.len();
    let mut s = RMat::zeros(n, n);
    for (i, (_, m)) in new.iter().enumerate() {
        let (coeffs, residual) = old.project_with_residual(m);
        if residual > SPAN_TOL {
            return Err(ReductionError::Span { index: i, residual });
        }
        for (j, c) in coeffs.iter().enumerate() {
            s[(i, j)] = c.re;
        }
    }
    let inverse = s.clone().try_inverse().ok_or(ReductionError::Singular)?;
    let change = BasisChange {
        matrix: s,
        inverse,
        source_labels: old.labels(),
        target_labels: new.iter().map(|(l, _)| l.clone()).collect(),
    };
    if change.inverse_defect() > 1e-12 * n as f64 {
        return Err(ReductionError::Singular);
    }
    Ok(change)
}

/// `S A S⁻¹`.
pub fn apply_basis_change(a: &AdjointMatrix, s: &BasisChange) -> Result<AdjointMatrix, ReductionError> {
    if a.dim() != s.dim() {
        return Err(ReductionError::Argument(format!(
            "adjoint matrix is {0}×{0} but S is {1}×{1}",
            a.dim(),
            s.dim()
        )));
    }
    Ok(a.transformed(s.matrix.clone(), s.inverse.clone(), s.target_labels.clone()))
}

/// `(s_a Σ_a + s_b Σ_b) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfSum {
    pub first: (i8, SpinorLabel),
    pub second: (i8, SpinorLabel),
}

impl HalfSum {
    fn new(a: &str, sign: i8, b: &str) -> Self {
        HalfSum {
            first: (1, a.parse().expect("static label")),
            second: (sign, b.parse().expect("static label")),
        }
    }

    pub fn matrix(&self) -> CMat {
        (self.first.1.matrix() * re(self.first.0 as f64) + self.second.1.matrix() * re(self.second.0 as f64))
            * re(0.5)
    }

    /// The same half-sum written over coefficients, e.g. `(g_XX - g_ZY)/2`.
    pub fn coefficient_form(&self) -> String {
        let sign = if self.second.0 < 0 { '-' } else { '+' };
        format!("(g_{} {sign} g_{})/2", self.first.1, self.second.1)
    }
}

impl fmt::Display for HalfSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.second.0 < 0 { '-' } else { '+' };
        write!(f, "({} {sign} {})/2", self.first.1, self.second.1)
    }
}

/// Two commuting su(2) triples, each obeying `[T_a, T_b] = 2i ε_abc T_c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Su2Pairing {
    pub case: u8,
    pub plus: [HalfSum; 3],
    pub minus: [HalfSum; 3],
}

impl Su2Pairing {
    pub fn elements(&self) -> impl Iterator<Item = &HalfSum> {
        self.plus.iter().chain(self.minus.iter())
    }

    /// The six spinor generators involved, in canonical order.
    pub fn support(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .elements()
            .flat_map(|h| [h.first.1, h.second.1])
            .map(|l| l.canonical_index().expect("traceless label"))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Largest `‖[T_a, T_b] − 2i ε_abc T_c‖_F` over both triples, plus the
    /// largest cross commutator between them.
    pub fn closure_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for triple in [&self.plus, &self.minus] {
            let m: Vec<CMat> = triple.iter().map(HalfSum::matrix).collect();
            for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
                let d = commutator(&m[a], &m[b]) - &m[c] * (I * 2.0);
                worst = worst.max(frobenius(&d));
            }
        }
        for p in &self.plus {
            for q in &self.minus {
                worst = worst.max(frobenius(&commutator(&p.matrix(), &q.matrix())));
            }
        }
        worst
    }
}

/// The pairings for the three so(4)⊕u(1) cases.
pub fn su2_pairing(case: u8) -> Result<Su2Pairing, ReductionError> {
    let h = HalfSum::new;
    let (plus, minus) = match case {
        1 => (
            [h("1X", 1, "XX"), h("1Y", 1, "XY"), h("1Z", 1, "XZ")],
            [h("1X", -1, "XX"), h("1Y", -1, "XY"), h("1Z", -1, "XZ")],
        ),
        2 => (
            [h("XX", 1, "ZY"), h("Y1", 1, "1Z"), h("ZX", -1, "XY")],
            [h("XX", -1, "ZY"), h("Y1", -1, "1Z"), h("ZX", 1, "XY")],
        ),
        3 => (
            [h("XX", -1, "YY"), h("YX", 1, "XY"), h("Z1", 1, "1Z")],
            [h("XX", 1, "YY"), h("YX", -1, "XY"), h("Z1", -1, "1Z")],
        ),
        other => return Err(ReductionError::UnknownCase(other)),
    };
    Ok(Su2Pairing { case, plus, minus })
}

/// Coefficients allowed to be non-zero in each case.
pub fn case_pattern(case: u8) -> Result<&'static [&'static str], ReductionError> {
    Ok(match case {
        1 => &["J_x", "h2_x", "h2_y", "h2_z"],
        2 => &["J_x", "h1_y", "h2_z"],
        3 => &["J_x", "J_y", "h1_z", "h2_z"],
        other => return Err(ReductionError::UnknownCase(other)),
    })
}

/// `[ad(σ_x), ad(σ_y), ad(σ_z)]` on the (X, Y, Z) basis.
pub fn su2_adjoint_generators() -> [CMat; 3] {
    let b = GeneratorBasis::su2();
    [1, 2, 3].map(|k| adjoint_of_matrix(&pauli(k), &b))
}

/// Writes a 3×3 block as `Σ c_a ad(σ_a)`; returns `c` and the Frobenius
/// residual of the fit.
pub fn su2_fields(block: &CMat) -> ([f64; 3], f64) {
    let gens = su2_adjoint_generators();
    let mut c = [0.0; 3];
    let mut rebuilt = CMat::zeros(3, 3);
    for (k, g) in gens.iter().enumerate() {
        let w = trace_product(&g.adjoint(), block) / trace_product(&g.adjoint(), g);
        c[k] = w.re;
        rebuilt += g * re(w.re);
    }
    (c, frobenius(&(block - rebuilt)))
}

type FieldFn = dyn Fn(f64) -> Result<[f64; 3], ReductionError> + Send + Sync;

/// The two 3×3 Bloch blocks of an so(4)⊕u(1) S-sector.
#[derive(Clone)]
pub struct BlochBlock {
    pub case: u8,
    pub pairing: Su2Pairing,
    /// S-sector generators (canonical indices) the transform acts on.
    pub sector: Vec<usize>,
    pub transform: BasisChange,
    /// `S A_S S⁻¹` on the six pairing generators.
    pub transformed: AdjointMatrix,
    pub a_plus: AdjointMatrix,
    pub a_minus: AdjointMatrix,
    fields: Arc<FieldFn>,
}

impl fmt::Debug for BlochBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlochBlock")
            .field("case", &self.case)
            .field("sector", &self.sector)
            .finish_non_exhaustive()
    }
}

/// Effective single-qubit fields of both blocks at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveFields {
    pub plus: [f64; 3],
    pub minus: [f64; 3],
}

impl BlochBlock {
    /// Effective fields `(f_x, f_y, f_z)` with `A± = Σ f_a ad(σ_a)`.
    pub fn effective_fields(&self, t: f64) -> Result<EffectiveFields, ReductionError> {
        let plus = (self.fields)(t)?;
        let (minus, residual) = su2_fields(&self.a_minus.at(t)?);
        if residual > 1e-12 * (1.0 + minus.iter().map(|x| x.abs()).sum::<f64>()) {
            return Err(ReductionError::NotSu2 { residual });
        }
        Ok(EffectiveFields { plus, minus })
    }

    /// Largest entry coupling the two 3×3 blocks at `t`.
    pub fn off_block_coupling(&self, t: f64) -> Result<f64, ReductionError> {
        let m = self.transformed.at(t)?;
        let mut worst: f64 = 0.0;
        for r in 0..6 {
            for c in 0..6 {
                if (r < 3) != (c < 3) {
                    worst = worst.max(m[(r, c)].norm());
                }
            }
        }
        Ok(worst)
    }

    /// Half-sum descriptions of g± in terms of S-sector coefficients.
    pub fn g_combination(&self) -> (Vec<String>, Vec<String>) {
        (
            self.pairing.plus.iter().map(HalfSum::coefficient_form).collect(),
            self.pairing.minus.iter().map(HalfSum::coefficient_form).collect(),
        )
    }

    /// `(g+, g−)` from a full 15-component coefficient vector.
    pub fn split(&self, g: &[f64]) -> ([f64; 3], [f64; 3]) {
        let local: Vec<f64> = self.sector.iter().map(|&i| g[i]).collect();
        let v = self.transform.apply(&local);
        ([v[0], v[1], v[2]], [v[3], v[4], v[5]])
    }
}

/// Reduces the S-sector of a case-1/2/3 Hamiltonian to its two Bloch
/// blocks.
pub fn bloch_blocks(case: u8, h: &HamiltonianSpec) -> Result<BlochBlock, ReductionError> {
    let allowed = case_pattern(case)?;
    let offending: Vec<String> = h
        .active_names()
        .into_iter()
        .filter(|n| !allowed.contains(n))
        .map(String::from)
        .collect();
    if !offending.is_empty() {
        return Err(ReductionError::CaseMismatch {
            case,
            allowed: allowed.join(", "),
            offending,
        });
    }
    let pairing = su2_pairing(case)?;
    let sector = pairing.support();
    let spinor = GeneratorBasis::spinor();
    let old = spinor.subset(&sector);
    let new: Vec<(String, CMat)> = pairing.elements().map(|e| (e.to_string(), e.matrix())).collect();
    let transform = compute_transform(&new, &old)?;
    let full = AdjointMatrix::spinor(h);
    let transformed = apply_basis_change(&full.restrict(&sector), &transform)?;
    let a_plus = transformed.restrict(&[0, 1, 2]);
    let a_minus = transformed.restrict(&[3, 4, 5]);
    let ap = a_plus.clone();
    let fields: Arc<FieldFn> = Arc::new(move |t| {
        let (c, residual) = su2_fields(&ap.at(t)?);
        if residual > 1e-12 * (1.0 + c.iter().map(|x| x.abs()).sum::<f64>()) {
            return Err(ReductionError::NotSu2 { residual });
        }
        Ok(c)
    });
    Ok(BlochBlock {
        case,
        pairing,
        sector,
        transform,
        transformed,
        a_plus,
        a_minus,
        fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::Coefficient;
    use crate::linalg::hermitian_eigen;
    use proptest::prelude::*;

    fn case_h(case: u8, v: [f64; 4]) -> HamiltonianSpec {
        let names = case_pattern(case).unwrap();
        HamiltonianSpec::from_named(names.iter().zip(v).map(|(n, x)| (*n, Coefficient::Constant(x)))).unwrap()
    }

    #[test]
    fn pairings_close() {
        for case in 1..=3 {
            let p = su2_pairing(case).unwrap();
            assert_eq!(p.closure_defect(), 0.0, "case {case}");
            assert_eq!(p.support().len(), 6);
        }
        assert!(su2_pairing(4).is_err());
    }

    #[test]
    fn case1_fields() {
        let b = bloch_blocks(1, &case_h(1, [1.0, 0.3, 0.2, 0.1])).unwrap();
        let f = b.effective_fields(0.0).unwrap();
        for (x, y) in f.plus.iter().zip([1.3, 0.2, 0.1]) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in f.minus.iter().zip([-0.7, 0.2, 0.1]) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(b.off_block_coupling(0.0).unwrap(), 0.0);
        let s = b.transform.matrix();
        assert!(s.iter().all(|x| *x == 0.0 || x.abs() == 0.5));
    }

    #[test]
    fn case1_without_coupling_is_symmetric() {
        let h = HamiltonianSpec::new_uncoupled(
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3, 0.2, 0.1].map(Coefficient::Constant),
        );
        let b = bloch_blocks(1, &h).unwrap();
        assert_eq!(b.a_plus.at(0.0).unwrap(), b.a_minus.at(0.0).unwrap());
    }

    #[test]
    fn case3_symmetric_point() {
        // J_x = J_y and equal z fields: the + block keeps only the summed
        // z field, the − block only the summed coupling
        let b = bloch_blocks(3, &case_h(3, [0.4, 0.4, 0.25, 0.25])).unwrap();
        let f = b.effective_fields(0.0).unwrap();
        assert!((f.plus[0]).abs() < 1e-15 && (f.plus[2] - 0.5).abs() < 1e-12);
        assert!((f.minus[0] - 0.8).abs() < 1e-12 && f.minus[2].abs() < 1e-15);
    }

    #[test]
    fn mismatch_is_reported() {
        let h = HamiltonianSpec::constant([1.0, 0.0, 0.0, 0.2, 0.0, 0.0, 0.0, 0.0, 0.1]).unwrap();
        match bloch_blocks(1, &h) {
            Err(ReductionError::CaseMismatch { offending, .. }) => assert_eq!(offending, ["h1_x"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn transform_errors_and_identity() {
        let b = GeneratorBasis::spinor().subset(&[0, 1, 2]);
        let same: Vec<(String, CMat)> = (0..3).map(|i| (b.label(i).into(), b.matrix(i).clone())).collect();
        let s = compute_transform(&same, &b).unwrap();
        assert_eq!(s.matrix(), &RMat::identity(3, 3));
        let mut swapped = same.clone();
        swapped.swap(0, 1);
        let p = compute_transform(&swapped, &b).unwrap();
        assert_eq!(p.matrix()[(0, 1)], 1.0);
        let mut outside = same.clone();
        outside[2].1 = GeneratorBasis::spinor().matrix(7).clone();
        assert!(matches!(compute_transform(&outside, &b), Err(ReductionError::Span { index: 2, .. })));
        let a = AdjointMatrix::constant(CMat::zeros(4, 4), (0..4).map(|i| i.to_string()).collect());
        assert!(apply_basis_change(&a, &s).is_err());
    }

    #[test]
    fn similarity_preserves_spectrum() {
        let h = case_h(2, [0.8, -0.3, 0.6, 0.0]);
        let b = bloch_blocks(2, &h).unwrap();
        let full = AdjointMatrix::spinor(&h).restrict(&b.sector);
        // A itself is Hermitian since iA is real antisymmetric
        let before = hermitian_eigen(&full.at(0.3).unwrap()).0;
        let after = hermitian_eigen(&b.transformed.at(0.3).unwrap()).0;
        for (x, y) in before.iter().zip(after) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn blocks_match_effective_fields(v in prop::array::uniform4(-2.0f64..2.0), case in 1u8..=3) {
            let mut v = v;
            v[0] += if v[0] >= 0.0 { 0.1 } else { -0.1 };
            let x = v;
            let h = case_h(case, v);
            let b = bloch_blocks(case, &h).unwrap();
            prop_assert!(b.off_block_coupling(0.0).unwrap() < 1e-12);
            let f = b.effective_fields(0.0).unwrap();
            let (p, m) = match case {
                1 => ([x[1] + x[0], x[2], x[3]], [x[1] - x[0], x[2], x[3]]),
                2 => ([x[0], x[1] + x[2], 0.0], [x[0], x[1] - x[2], 0.0]),
                _ => ([x[0] - x[1], 0.0, x[2] + x[3]], [x[0] + x[1], 0.0, x[2] - x[3]]),
            };
            for k in 0..3 {
                prop_assert!((f.plus[k] - p[k]).abs() < 1e-12);
                prop_assert!((f.minus[k] - m[k]).abs() < 1e-12);
            }
            // norm split with the half-sum convention
            let g: Vec<f64> = (0..15).map(|i| ((i * 7 + 3) % 11) as f64 / 5.0 - 1.0).collect();
            let sector_norm: f64 = b.sector.iter().map(|&i| g[i] * g[i]).sum();
            let (gp, gm) = b.split(&g);
            let split: f64 = gp.iter().chain(gm.iter()).map(|x| x * x).sum();
            prop_assert!((sector_norm - 2.0 * split).abs() < 1e-12);
        }
    }
}

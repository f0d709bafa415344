//! Generator bases of su(4).
//!
//! Two bases are built in: the spinor basis of Pauli tensor products and the
//! generalized Gell-Mann (λ) basis. A [`GeneratorBasis`] can also hold any
//! ordered, trace-orthogonal list of Hermitian generators, which is how the
//! sector orderings and su(2) pairings used by the reduction module are
//! represented.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::LieError;
use crate::linalg::{c, frobenius, kron, pauli, re, trace_product, CMat};

/// Tolerance for Gram-matrix checks and projections.
pub const BASIS_TOL: f64 = 1e-12;

/// Single-qubit factor of a spinor label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => '1',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_symbol(ch: char) -> Option<Pauli> {
        match ch {
            '1' | 'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// `AB` stands for σ_A ⊗ σ_B with qubit 1 as the left (outer) factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinorLabel(pub Pauli, pub Pauli);

impl SpinorLabel {
    pub fn matrix(self) -> CMat {
        kron(&pauli(self.0.index()), &pauli(self.1.index()))
    }

    /// Position in the canonical spinor ordering, `None` for the identity.
    pub fn canonical_index(self) -> Option<usize> {
        let (a, b) = (self.0.index(), self.1.index());
        match (a, b) {
            (0, 0) => None,
            (0, b) => Some(b - 1),
            (a, 0) => Some(2 + a),
            (a, b) => Some(6 + 3 * (a - 1) + (b - 1)),
        }
    }
}

impl fmt::Display for SpinorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.0.symbol(), self.1.symbol())
    }
}

impl FromStr for SpinorLabel {
    type Err = LieError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let parsed = match (chars.next(), chars.next(), chars.next()) {
            (Some(a), Some(b), None) => Pauli::from_symbol(a).zip(Pauli::from_symbol(b)),
            _ => None,
        };
        parsed
            .map(|(a, b)| SpinorLabel(a, b))
            .ok_or_else(|| LieError::UnknownLabel(s.to_owned()))
    }
}

/// A spinor generator with a ±1 sign, written `-Z1` when negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignedLabel {
    pub negative: bool,
    pub label: SpinorLabel,
}

impl SignedLabel {
    pub fn positive(label: SpinorLabel) -> Self {
        SignedLabel {
            negative: false,
            label,
        }
    }

    pub fn sign(self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    pub fn matrix(self) -> CMat {
        self.label.matrix() * re(self.sign())
    }
}

impl fmt::Display for SignedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            write!(f, "-{}", self.label)
        } else {
            write!(f, "{}", self.label)
        }
    }
}

impl FromStr for SignedLabel {
    type Err = LieError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.strip_prefix('-') {
            Some(rest) => Ok(SignedLabel {
                negative: true,
                label: rest.parse()?,
            }),
            None => Ok(SignedLabel::positive(s.trim_start_matches('+').parse()?)),
        }
    }
}

/// The canonical spinor ordering used as the home basis everywhere.
pub const SPINOR_ORDER: [&str; 15] = [
    "1X", "1Y", "1Z", "X1", "Y1", "Z1", "XX", "XY", "XZ", "YX", "YY", "YZ", "ZX", "ZY", "ZZ",
];

pub fn spinor_labels() -> Vec<SpinorLabel> {
    SPINOR_ORDER.iter().map(|s| s.parse().unwrap()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Spinor,
    Lambda,
    Custom,
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub label: String,
    pub matrix: CMat,
}

/// Ordered set of Hermitian, mutually trace-orthogonal 4×4 generators with a
/// common normalization `tr(T_i T_i)`.
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    kind: BasisKind,
    generators: Vec<Generator>,
    normalization: f64,
}

impl GeneratorBasis {
    /// Builds a basis from labelled matrices, checking hermiticity and that
    /// the Gram matrix is `normalization · identity`.
    pub fn new(kind: BasisKind, generators: Vec<Generator>) -> Result<Self, LieError> {
        let first = generators.first().ok_or(LieError::EmptyBasis)?;
        let normalization = trace_product(&first.matrix, &first.matrix).re;
        if normalization <= BASIS_TOL {
            return Err(LieError::NotOrthogonal {
                i: 0,
                j: 0,
                value: normalization,
            });
        }
        for (i, g) in generators.iter().enumerate() {
            let defect = frobenius(&(&g.matrix - g.matrix.adjoint()));
            if defect > BASIS_TOL {
                return Err(LieError::NotHermitian {
                    label: g.label.clone(),
                });
            }
            for (j, h) in generators.iter().enumerate().skip(i) {
                let value = trace_product(&g.matrix, &h.matrix);
                let expected = if i == j { normalization } else { 0.0 };
                if (value - re(expected)).norm() > BASIS_TOL * normalization.max(1.0) {
                    return Err(LieError::NotOrthogonal {
                        i,
                        j,
                        value: value.re,
                    });
                }
            }
        }
        Ok(GeneratorBasis {
            kind,
            generators,
            normalization,
        })
    }

    /// The 15 spinor generators in [`SPINOR_ORDER`].
    pub fn spinor() -> Self {
        let generators = spinor_labels()
            .into_iter()
            .map(|l| Generator {
                label: l.to_string(),
                matrix: l.matrix(),
            })
            .collect();
        GeneratorBasis {
            kind: BasisKind::Spinor,
            generators,
            normalization: 4.0,
        }
    }

    /// λ_1 … λ_15 (labels `L1` … `L15`), normalized to tr(λ_i λ_j) = 2δ_ij.
    pub fn lambda() -> Self {
        let generators = (1..=15)
            .map(|k| Generator {
                label: format!("L{k}"),
                matrix: lambda_matrix(k),
            })
            .collect();
        GeneratorBasis {
            kind: BasisKind::Lambda,
            generators,
            normalization: 2.0,
        }
    }

    /// su(2) on a single qubit: X, Y, Z (2×2, normalization 2).
    pub fn su2() -> Self {
        let generators = ["X", "Y", "Z"]
            .iter()
            .enumerate()
            .map(|(k, l)| Generator {
                label: (*l).to_string(),
                matrix: pauli(k + 1),
            })
            .collect();
        GeneratorBasis {
            kind: BasisKind::Custom,
            generators,
            normalization: 2.0,
        }
    }

    /// Signed spinor generators in the given order, e.g. `["ZX", "-Z1"]`.
    pub fn from_signed_labels(labels: &[SignedLabel]) -> Result<Self, LieError> {
        let generators = labels
            .iter()
            .map(|l| Generator {
                label: l.to_string(),
                matrix: l.matrix(),
            })
            .collect();
        Self::new(BasisKind::Custom, generators)
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn matrix(&self, index: usize) -> &CMat {
        &self.generators[index].matrix
    }

    pub fn label(&self, index: usize) -> &str {
        &self.generators[index].label
    }

    pub fn labels(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.label.clone()).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.label == label)
    }

    pub fn lookup(&self, label: &str) -> Option<&CMat> {
        self.index_of(label).map(|i| self.matrix(i))
    }

    /// Coefficients `tr(T_k M) / normalization` of `m` on the basis.
    pub fn project(&self, m: &CMat) -> Vec<Complex64> {
        self.generators
            .iter()
            .map(|g| trace_product(&g.matrix, m) / self.normalization)
            .collect()
    }

    /// Like [`project`](Self::project) but also returns the Frobenius norm of
    /// the part of `m` lying outside the span.
    pub fn project_with_residual(&self, m: &CMat) -> (Vec<Complex64>, f64) {
        let coeffs = self.project(m);
        let rebuilt = self.combine(&coeffs);
        (coeffs, frobenius(&(m - rebuilt)))
    }

    pub fn combine(&self, coeffs: &[Complex64]) -> CMat {
        let n = self.generators[0].matrix.nrows();
        let mut out = CMat::zeros(n, n);
        for (g, w) in self.generators.iter().zip(coeffs) {
            if *w != Complex64::new(0.0, 0.0) {
                out += &g.matrix * *w;
            }
        }
        out
    }

    pub fn combine_real(&self, coeffs: &[f64]) -> CMat {
        let n = self.generators[0].matrix.nrows();
        let mut out = CMat::zeros(n, n);
        for (g, w) in self.generators.iter().zip(coeffs) {
            if *w != 0.0 {
                out += &g.matrix * re(*w);
            }
        }
        out
    }

    /// Sub-basis made of the given indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> GeneratorBasis {
        GeneratorBasis {
            kind: BasisKind::Custom,
            generators: indices.iter().map(|&i| self.generators[i].clone()).collect(),
            normalization: self.normalization,
        }
    }
}

/// λ_k as listed in the Gell-Mann style table for su(4) (k = 1..15).
pub fn lambda_matrix(k: usize) -> CMat {
    let mut m = CMat::zeros(4, 4);
    // off-diagonal generators come in (symmetric, antisymmetric) pairs
    let off_diagonal = match k {
        1 | 2 => Some((0, 1)),
        4 | 5 => Some((0, 2)),
        6 | 7 => Some((1, 2)),
        9 | 10 => Some((0, 3)),
        11 | 12 => Some((1, 3)),
        13 | 14 => Some((2, 3)),
        _ => None,
    };
    if let Some((i, j)) = off_diagonal {
        if matches!(k, 2 | 5 | 7 | 10 | 12 | 14) {
            m[(i, j)] = c(0.0, -1.0);
            m[(j, i)] = c(0.0, 1.0);
        } else {
            m[(i, j)] = re(1.0);
            m[(j, i)] = re(1.0);
        }
        return m;
    }
    let diag: [f64; 4] = match k {
        3 => [1.0, -1.0, 0.0, 0.0],
        8 => {
            let s = 1.0 / 3f64.sqrt();
            [s, s, -2.0 * s, 0.0]
        }
        15 => {
            let s = 1.0 / 6f64.sqrt();
            [s, s, s, -3.0 * s]
        }
        _ => panic!("lambda index {k} out of range 1..=15"),
    };
    for (i, d) in diag.iter().enumerate() {
        m[(i, i)] = re(*d);
    }
    m
}

/// One bridge identity between the λ and spinor bases:
/// `lambda_scale · λ_k = Σ weight · spinor`.
#[derive(Debug, Clone)]
pub struct LambdaRelation {
    pub lambda: usize,
    pub lambda_scale: f64,
    pub spinor_terms: Vec<(f64, SpinorLabel)>,
}

impl LambdaRelation {
    /// Matrix norm of `lambda_scale · λ_k − Σ weight · spinor`.
    pub fn defect(&self) -> f64 {
        let mut rhs = CMat::zeros(4, 4);
        for (w, l) in &self.spinor_terms {
            rhs += l.matrix() * re(*w);
        }
        frobenius(&(lambda_matrix(self.lambda) * re(self.lambda_scale) - rhs))
    }
}

/// The nine identities relating λ_1..λ_8, λ_15 to spinor generators.
pub fn lambda_spinor_relations() -> Vec<LambdaRelation> {
    let l = |s: &str| s.parse::<SpinorLabel>().unwrap();
    let rel = |k, scale, terms: &[(f64, &str)]| LambdaRelation {
        lambda: k,
        lambda_scale: scale,
        spinor_terms: terms.iter().map(|(w, s)| (*w, l(s))).collect(),
    };
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    // (1 + Z)X expands to 1X + ZX, and so on.
    vec![
        rel(1, 2.0, &[(1.0, "1X"), (1.0, "ZX")]),
        rel(2, 2.0, &[(1.0, "1Y"), (1.0, "ZY")]),
        rel(3, 2.0, &[(1.0, "1Z"), (1.0, "ZZ")]),
        rel(4, 2.0, &[(1.0, "X1"), (1.0, "XZ")]),
        rel(5, 2.0, &[(1.0, "Y1"), (1.0, "YZ")]),
        rel(6, 2.0, &[(1.0, "XX"), (1.0, "YY")]),
        rel(7, 2.0, &[(1.0, "YX"), (-1.0, "XY")]),
        rel(8, 2.0 * s3, &[(2.0, "Z1"), (-1.0, "1Z"), (1.0, "ZZ")]),
        rel(15, s6, &[(1.0, "Z1"), (1.0, "1Z"), (-1.0, "ZZ")]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spinor_basis_shape() {
        let b = GeneratorBasis::spinor();
        assert_eq!(b.len(), 15);
        assert_eq!(b.normalization(), 4.0);
        let xx = b.lookup("XX").unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i + j == 3 { 1.0 } else { 0.0 };
                assert_eq!(xx[(i, j)], re(expected));
            }
        }
    }

    #[test]
    fn spinor_gram_is_4_delta() {
        let b = GeneratorBasis::spinor();
        for i in 0..15 {
            let m = b.matrix(i);
            assert_eq!(frobenius(&(m - m.adjoint())), 0.0);
            assert!(m.trace().norm() < 1e-15);
            for j in 0..15 {
                let v = trace_product(m, b.matrix(j));
                let expected = if i == j { 4.0 } else { 0.0 };
                assert!((v - re(expected)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn lambda_gram_is_2_delta() {
        let b = GeneratorBasis::lambda();
        assert!(GeneratorBasis::new(BasisKind::Lambda, b.generators().to_vec()).is_ok());
        for i in 0..15 {
            for j in 0..15 {
                let v = trace_product(b.matrix(i), b.matrix(j));
                let expected = if i == j { 2.0 } else { 0.0 };
                assert!((v - re(expected)).norm() < 1e-14);
            }
        }
        let l8 = lambda_matrix(8);
        let s = 1.0 / 3f64.sqrt();
        assert!((l8[(2, 2)].re + 2.0 * s).abs() < 1e-15);
        assert!((l8[(0, 0)].re - s).abs() < 1e-15);
        assert_eq!(l8[(3, 3)], re(0.0));
    }

    #[test]
    fn canonical_indices_round_trip() {
        for (i, l) in spinor_labels().into_iter().enumerate() {
            assert_eq!(l.canonical_index(), Some(i));
        }
        assert_eq!(SpinorLabel(Pauli::I, Pauli::I).canonical_index(), None);
    }

    #[test]
    fn label_parsing() {
        let l: SignedLabel = "-Z1".parse().unwrap();
        assert!(l.negative);
        assert_eq!(l.label.to_string(), "Z1");
        assert_eq!(l.to_string(), "-Z1");
        assert!("XQ".parse::<SpinorLabel>().is_err());
        assert!("XYZ".parse::<SpinorLabel>().is_err());
    }

    #[test]
    fn non_orthogonal_basis_is_rejected() {
        let x = SpinorLabel(Pauli::X, Pauli::I).matrix();
        let gens = vec![
            Generator {
                label: "a".into(),
                matrix: x.clone(),
            },
            Generator {
                label: "b".into(),
                matrix: &x + SpinorLabel(Pauli::Y, Pauli::I).matrix(),
            },
        ];
        assert!(matches!(
            GeneratorBasis::new(BasisKind::Custom, gens),
            Err(LieError::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn relations_hold() {
        for r in lambda_spinor_relations() {
            assert!(r.defect() < 1e-14, "relation for λ{}", r.lambda);
        }
    }
}

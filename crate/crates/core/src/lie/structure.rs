use std::collections::BTreeMap;

use super::{GeneratorBasis, LieError};
use crate::linalg::{commutator, frobenius, trace_product, CMat, I};

/// Entries with |f| below this are treated as zero.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// Real structure constants in the convention `[T_i, T_j] = i f_ijk T_k`.
///
/// Only non-zero entries are stored; every ordered triple is present, so the
/// antisymmetric completions of a listed entry can be read back directly.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    dim: usize,
    table: BTreeMap<(usize, usize, usize), f64>,
}

impl StructureConstants {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// f_ijk with 0-based indices.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.table.get(&(i, j, k)).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        self.table.iter().map(|(k, v)| (*k, *v))
    }

    /// Entries with i < j < k, the usual tabulated form.
    pub fn ordered_entries(&self) -> Vec<((usize, usize, usize), f64)> {
        self.entries()
            .filter(|((i, j, k), _)| i < j && j < k)
            .collect()
    }

    /// `i Σ_k f_ijk T_k`, which should equal `[T_i, T_j]`.
    pub fn reconstruct(&self, basis: &GeneratorBasis, i: usize, j: usize) -> CMat {
        let n = basis.matrix(0).nrows();
        let mut out = CMat::zeros(n, n);
        for k in 0..self.dim {
            let f = self.get(i, j, k);
            if f != 0.0 {
                out += basis.matrix(k) * (I * f);
            }
        }
        out
    }
}

/// Computes `f_ijk = tr([T_i, T_j] T_k) / (i · tr(T_k T_k))` and checks that
/// every commutator stays inside the span.
pub fn structure_constants(basis: &GeneratorBasis) -> Result<StructureConstants, LieError> {
    let n = basis.len();
    let norm = basis.normalization();
    let mut table = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let comm = commutator(basis.matrix(i), basis.matrix(j));
            let mut rebuilt = CMat::zeros(comm.nrows(), comm.ncols());
            for k in 0..n {
                let f = trace_product(&comm, basis.matrix(k)) / (I * norm);
                // f is real for Hermitian generators; the imaginary part only
                // carries rounding
                if f.re.abs() > STRUCTURE_TOL {
                    table.insert((i, j, k), f.re);
                    rebuilt += basis.matrix(k) * (I * f.re);
                }
            }
            let residual = frobenius(&(&comm - &rebuilt));
            if residual > STRUCTURE_TOL * norm.max(1.0) * 10.0 {
                return Err(LieError::Closure { i, j, residual });
            }
        }
    }
    Ok(StructureConstants { dim: n, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{BasisKind, Generator};

    #[test]
    fn spinor_constants_are_pm_two() {
        let b = GeneratorBasis::spinor();
        let f = structure_constants(&b).unwrap();
        for (_, v) in f.entries() {
            assert!((v.abs() - 2.0).abs() < 1e-14);
        }
        for i in 0..15 {
            for j in 0..15 {
                let err = frobenius(&(commutator(b.matrix(i), b.matrix(j)) - f.reconstruct(&b, i, j)));
                assert!(err < 1e-12);
                for k in 0..15 {
                    assert_eq!(f.get(i, j, k), -f.get(j, i, k));
                }
            }
        }
    }

    #[test]
    fn jacobi_identity() {
        for b in [GeneratorBasis::spinor(), GeneratorBasis::lambda()] {
            let f = structure_constants(&b).unwrap();
            let n = b.len();
            for (i, j, k, l) in [(0, 1, 2, 3), (3, 7, 9, 14), (4, 5, 7, 12), (1, 8, 10, 13), (2, 6, 11, 5)] {
                let mut sum = 0.0;
                for m in 0..n {
                    sum += f.get(i, j, m) * f.get(m, k, l)
                        + f.get(j, k, m) * f.get(m, i, l)
                        + f.get(k, i, m) * f.get(m, j, l);
                }
                assert!(sum.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn open_set_fails_closure() {
        let b = GeneratorBasis::spinor();
        let sub = GeneratorBasis::new(
            BasisKind::Custom,
            vec![
                Generator {
                    label: "X1".into(),
                    matrix: b.lookup("X1").unwrap().clone(),
                },
                Generator {
                    label: "Y1".into(),
                    matrix: b.lookup("Y1").unwrap().clone(),
                },
            ],
        )
        .unwrap();
        assert!(matches!(structure_constants(&sub), Err(LieError::Closure { .. })));
    }
}

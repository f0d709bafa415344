//! Small dense helpers shared by every module.
//!
//! Everything here works on `nalgebra` dynamic matrices; the matrices involved
//! are at most 15×15, so allocation is not a concern.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The four single-qubit matrices in the order 1, X, Y, Z.
pub fn pauli(index: usize) -> CMat {
    let z = re(0.0);
    let one = re(1.0);
    match index {
        0 => CMat::from_row_slice(2, 2, &[one, z, z, one]),
        1 => CMat::from_row_slice(2, 2, &[z, one, one, z]),
        2 => CMat::from_row_slice(2, 2, &[z, -I, I, z]),
        3 => CMat::from_row_slice(2, 2, &[one, z, z, -one]),
        _ => panic!("pauli index {index} out of range"),
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `ab - ba`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    // tr(AB) without forming AB
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_defect(a: &CMat) -> f64 {
    frobenius(&(a - a.adjoint()))
}

pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.nrows();
    frobenius(&(u.adjoint() * u - CMat::identity(n, n)))
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(re)
}

/// `⟨a|b⟩`.
pub fn inner(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Real expectation value `⟨ψ|M|ψ⟩` of a Hermitian matrix.
pub fn expectation(m: &CMat, psi: &CVec) -> f64 {
    inner(psi, &(m * psi)).re
}

/// Normalized state with independent uniform real and imaginary parts.
pub fn random_state<R: rand::Rng>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).normalize()
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted ascending.
/// Columns of the returned matrix are the matching unit eigenvectors.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// exp(-i H t) for Hermitian `h`, through the spectral decomposition.
pub fn expm_hermitian(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(h);
    let n = h.nrows();
    let mut d = CMat::zeros(n, n);
    for (k, v) in vals.iter().enumerate() {
        d[(k, k)] = Complex64::from_polar(1.0, -v * t);
    }
    &vecs * d * vecs.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let x = pauli(1);
        let y = pauli(2);
        let z = pauli(3);
        let xy = commutator(&x, &y);
        assert!(frobenius(&(xy - z.map(|v| v * 2.0 * I))) < 1e-15);
        assert!(frobenius(&(&x * &x - identity(2))) < 1e-15);
    }

    #[test]
    fn eigen_sorted_and_orthonormal() {
        let h = kron(&pauli(1), &pauli(1)) + kron(&pauli(0), &pauli(3)).map(|v| v * 0.3);
        let (vals, vecs) = hermitian_eigen(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        assert!(unitarity_defect(&vecs) < 1e-12);
        let rebuilt = &vecs * CMat::from_diagonal(&nalgebra::DVector::from_iterator(4, vals.iter().map(|v| re(*v)))) * vecs.adjoint();
        assert!(frobenius(&(rebuilt - h)) < 1e-12);
    }

    #[test]
    fn expm_is_unitary() {
        let h = kron(&pauli(2), &pauli(3)) + kron(&pauli(1), &pauli(0));
        let u = expm_hermitian(&h, 0.7);
        assert!(unitarity_defect(&u) < 1e-12);
    }
}

use std::fmt;
use std::sync::Arc;

use super::{LieError, SpinorLabel};
use crate::expr::{CoeffFn, EvalError, ExprError};
use crate::linalg::{re, CMat};

/// Coefficient names in storage order.
pub const COEFFICIENT_NAMES: [&str; 9] = [
    "J_x", "J_y", "J_z", "h1_x", "h1_y", "h1_z", "h2_x", "h2_y", "h2_z",
];

/// Spinor generator multiplying each coefficient, aligned with
/// [`COEFFICIENT_NAMES`].
pub const COEFFICIENT_LABELS: [&str; 9] = ["XX", "YY", "ZZ", "X1", "Y1", "Z1", "1X", "1Y", "1Z"];

/// Canonical spinor index of each coefficient's generator.
const CANONICAL_INDEX: [usize; 9] = [6, 10, 14, 3, 4, 5, 0, 1, 2];

type CoeffClosure = dyn Fn(f64) -> f64 + Send + Sync;

/// One real, time-dependent coefficient.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Expr(CoeffFn),
    Func(Arc<CoeffClosure>),
}

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient::Constant(0.0)
    }

    pub fn parse(source: &str) -> Result<Self, ExprError> {
        Ok(Coefficient::Expr(crate::expr::parse(source)?))
    }

    pub fn func<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Coefficient::Func(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        match self {
            Coefficient::Constant(v) => Ok(*v),
            Coefficient::Expr(f) => f.eval(t),
            Coefficient::Func(f) => {
                let v = f(t);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(EvalError {
                        t,
                        reason: "non-finite coefficient value".into(),
                    })
                }
            }
        }
    }

    /// The value when the coefficient does not depend on time.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(v) => Some(*v),
            Coefficient::Expr(f) => f.constant_value(),
            Coefficient::Func(_) => None,
        }
    }

    /// True only when the coefficient is provably zero for every t.
    /// Closures are never considered zero.
    pub fn is_identically_zero(&self) -> bool {
        self.constant_value() == Some(0.0)
    }
}

impl From<f64> for Coefficient {
    fn from(v: f64) -> Self {
        Coefficient::Constant(v)
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(v) => write!(f, "Constant({v})"),
            Coefficient::Expr(e) => write!(f, "Expr({:?})", e.source()),
            Coefficient::Func(_) => f.write_str("Func(..)"),
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(v) => write!(f, "{v}"),
            Coefficient::Expr(e) => f.write_str(e.source()),
            Coefficient::Func(_) => f.write_str("<closure>"),
        }
    }
}

/// `H = Σ J_i σ_i⊗σ_i + Σ h1_i σ_i⊗1 + Σ h2_i 1⊗σ_i`.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    coeffs: [Coefficient; 9],
}

impl HamiltonianSpec {
    /// Rejects specs whose three couplings are all identically zero.
    pub fn new(coeffs: [Coefficient; 9]) -> Result<Self, LieError> {
        let spec = Self::new_uncoupled(coeffs);
        if spec.coeffs[..3].iter().all(Coefficient::is_identically_zero) {
            return Err(LieError::NoCoupling);
        }
        Ok(spec)
    }

    /// Same as [`new`](Self::new) without the coupling check, for the
    /// single-qubit and decoupled cases.
    pub fn new_uncoupled(coeffs: [Coefficient; 9]) -> Self {
        HamiltonianSpec { coeffs }
    }

    pub fn constant(values: [f64; 9]) -> Result<Self, LieError> {
        Self::new(values.map(Coefficient::Constant))
    }

    /// Builds from `(name, coefficient)` pairs; names not listed are zero.
    pub fn from_named<'a, I>(pairs: I) -> Result<Self, LieError>
    where
        I: IntoIterator<Item = (&'a str, Coefficient)>,
    {
        let mut coeffs: [Coefficient; 9] = std::array::from_fn(|_| Coefficient::zero());
        for (name, c) in pairs {
            let k = name_index(name)?;
            coeffs[k] = c;
        }
        Self::new(coeffs)
    }

    pub fn coefficients(&self) -> &[Coefficient; 9] {
        &self.coeffs
    }

    pub fn coefficient(&self, name: &str) -> Result<&Coefficient, LieError> {
        Ok(&self.coeffs[name_index(name)?])
    }

    /// Copy with one coefficient replaced; the coupling check is re-run.
    pub fn with_coefficient(&self, name: &str, c: Coefficient) -> Result<Self, LieError> {
        let mut coeffs = self.coeffs.clone();
        coeffs[name_index(name)?] = c;
        Self::new(coeffs)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| c.constant_value().is_some())
    }

    /// Values in [`COEFFICIENT_NAMES`] order.
    pub fn coefficients_at(&self, t: f64) -> Result<[f64; 9], EvalError> {
        let mut out = [0.0; 9];
        for (o, c) in out.iter_mut().zip(&self.coeffs) {
            *o = c.eval(t)?;
        }
        Ok(out)
    }

    /// Expansion of H(t) over the canonical spinor basis.
    pub fn spinor_vector_at(&self, t: f64) -> Result<[f64; 15], EvalError> {
        let vals = self.coefficients_at(t)?;
        let mut out = [0.0; 15];
        for (k, v) in vals.into_iter().enumerate() {
            out[CANONICAL_INDEX[k]] = v;
        }
        Ok(out)
    }

    pub fn matrix_at(&self, t: f64) -> Result<CMat, EvalError> {
        let vals = self.coefficients_at(t)?;
        let mut h = CMat::zeros(4, 4);
        for (k, v) in vals.into_iter().enumerate() {
            if v != 0.0 {
                let label: SpinorLabel = COEFFICIENT_LABELS[k].parse().expect("static label");
                h += label.matrix() * re(v);
            }
        }
        Ok(h)
    }

    /// Canonical spinor indices of the coefficients that are not identically
    /// zero, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_identically_zero())
            .map(|(k, _)| CANONICAL_INDEX[k])
            .collect();
        s.sort_unstable();
        s
    }

    /// Names of the coefficients that are not identically zero.
    pub fn active_names(&self) -> Vec<&'static str> {
        self.coeffs
            .iter()
            .zip(COEFFICIENT_NAMES)
            .filter(|(c, _)| !c.is_identically_zero())
            .map(|(_, n)| n)
            .collect()
    }
}

fn name_index(name: &str) -> Result<usize, LieError> {
    COEFFICIENT_NAMES
        .iter()
        .position(|n| *n == name)
        .ok_or_else(|| LieError::UnknownCoefficient(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::GeneratorBasis;
    use crate::linalg::{frobenius, hermitian_defect};

    #[test]
    fn requires_a_coupling() {
        assert_eq!(
            HamiltonianSpec::constant([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap_err(),
            LieError::NoCoupling
        );
        assert!(HamiltonianSpec::from_named([("J_y", Coefficient::parse("cos(t)").unwrap())]).is_ok());
        assert!(HamiltonianSpec::from_named([("J_x", Coefficient::parse("0*1").unwrap())]).is_err());
        assert!(matches!(
            HamiltonianSpec::from_named([("J_w", 1.0.into())]),
            Err(LieError::UnknownCoefficient(_))
        ));
    }

    #[test]
    fn matrix_matches_spinor_expansion() {
        let h = HamiltonianSpec::constant([0.7, -0.2, 0.3, 0.1, 0.5, -0.9, 1.1, 0.4, -0.6]).unwrap();
        let m = h.matrix_at(0.0).unwrap();
        assert!(hermitian_defect(&m) < 1e-15);
        let v = h.spinor_vector_at(0.0).unwrap();
        let basis = GeneratorBasis::spinor();
        let rebuilt = basis.combine_real(&v);
        assert!(frobenius(&(rebuilt - &m)) < 1e-14);
        let proj = basis.project(&m);
        for (p, x) in proj.iter().zip(v) {
            assert!((p.re - x).abs() < 1e-15 && p.im.abs() < 1e-15);
        }
        assert_eq!(h.support(), (0..15).filter(|i| [0, 1, 2, 3, 4, 5, 6, 10, 14].contains(i)).collect::<Vec<_>>());
    }

    #[test]
    fn time_dependence_and_errors() {
        let h = HamiltonianSpec::from_named([
            ("J_x", 1.0.into()),
            ("h2_y", Coefficient::parse("0.4*cos(t)").unwrap()),
            ("h2_z", Coefficient::parse("1/t").unwrap()),
        ])
        .unwrap();
        assert!(!h.is_constant());
        assert_eq!(h.spinor_vector_at(1.0).unwrap()[1], 0.4 * 1f64.cos());
        assert!(h.matrix_at(0.0).is_err());
        assert_eq!(h.active_names(), vec!["J_x", "h2_y", "h2_z"]);
    }
}

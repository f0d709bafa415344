//! Fixed-step RK4 and adaptive Dormand–Prince on a uniform output grid.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::linalg::{frobenius, CMat};

/// `steps + 1` equally spaced points from `t0` to `tf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub tf: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, tf: f64, steps: usize) -> Result<Self, EngineError> {
        let g = TimeGrid { t0, tf, steps };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.t0.is_finite() && self.tf.is_finite()) || self.tf <= self.t0 {
            return Err(EngineError::Argument(format!(
                "time grid needs finite t0 < tf, got [{}, {}]",
                self.t0, self.tf
            )));
        }
        if self.steps == 0 {
            return Err(EngineError::Argument("time grid needs at least one step".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        (self.tf - self.t0) / self.steps as f64
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.tf
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    /// Same span with `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> TimeGrid {
        TimeGrid {
            steps: self.steps * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
    Rk45,
}

/// Integrator choice. For RK4, `substeps` steps are taken per grid
/// interval; for RK45, `tol` is the relative error target per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: Method,
    pub tol: f64,
    pub substeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: Method::Rk4,
            tol: 1e-10,
            substeps: 1,
        }
    }
}

impl SolverOptions {
    pub fn rk4(substeps: usize) -> Self {
        SolverOptions {
            substeps: substeps.max(1),
            ..Default::default()
        }
    }

    pub fn rk45(tol: f64) -> Self {
        SolverOptions {
            method: Method::Rk45,
            tol,
            substeps: 1,
        }
    }
}

/// Vector-space operations the integrators need.
pub trait OdeState: Clone {
    /// `self += a · x`
    fn axpy(&mut self, a: f64, x: &Self);
    fn is_finite(&self) -> bool;
    fn norm(&self) -> f64;
}

impl OdeState for DVector<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        nalgebra::Matrix::axpy(self, a, x, 1.0);
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
    fn norm(&self) -> f64 {
        nalgebra::Matrix::norm(self)
    }
}

impl OdeState for CMat {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.zip_apply(x, |s, v| *s += v * a);
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
    fn norm(&self) -> f64 {
        frobenius(self)
    }
}

fn combine<S: OdeState>(y: &S, terms: &[(f64, &S)]) -> S {
    let mut out = y.clone();
    for (a, k) in terms {
        if *a != 0.0 {
            out.axpy(*a, k);
        }
    }
    out
}

fn rk4_step<S, F>(f: &F, t: f64, y: &S, h: f64) -> Result<S, EngineError>
where
    S: OdeState,
    F: Fn(f64, &S) -> Result<S, EngineError>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + h / 2.0, &combine(y, &[(h / 2.0, &k1)]))?;
    let k3 = f(t + h / 2.0, &combine(y, &[(h / 2.0, &k2)]))?;
    let k4 = f(t + h, &combine(y, &[(h, &k3)]))?;
    Ok(combine(
        y,
        &[(h / 6.0, &k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)],
    ))
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince attempt; returns the 5th-order solution and the
/// norm of the embedded error estimate.
fn dopri_step<S, F>(f: &F, t: f64, y: &S, h: f64) -> Result<(S, f64), EngineError>
where
    S: OdeState,
    F: Fn(f64, &S) -> Result<S, EngineError>,
{
    let mut k: Vec<S> = Vec::with_capacity(7);
    for s in 0..7 {
        let terms: Vec<(f64, &S)> = (0..s).map(|j| (h * A[s][j], &k[j])).collect();
        let ys = combine(y, &terms);
        k.push(f(t + C[s] * h, &ys)?);
    }
    let y5 = combine(y, &(0..7).map(|j| (h * B5[j], &k[j])).collect::<Vec<_>>());
    let zero = combine(y, &[(-1.0, y)]);
    let err = combine(&zero, &(0..7).map(|j| (h * (B5[j] - B4[j]), &k[j])).collect::<Vec<_>>());
    Ok((y5, err.norm()))
}

/// Integrates `ẏ = f(t, y)` and returns the state at every grid point.
pub fn integrate<S, F>(f: F, y0: S, grid: &TimeGrid, opts: &SolverOptions) -> Result<Vec<S>, EngineError>
where
    S: OdeState,
    F: Fn(f64, &S) -> Result<S, EngineError>,
{
    grid.validate()?;
    let mut out = Vec::with_capacity(grid.len());
    let mut y = y0;
    if !y.is_finite() {
        return Err(EngineError::Integration {
            t: grid.t0,
            reason: "non-finite initial state".into(),
        });
    }
    out.push(y.clone());
    let mut h_try = grid.dt();
    for k in 0..grid.steps {
        let (ta, tb) = (grid.time(k), grid.time(k + 1));
        match opts.method {
            Method::Rk4 => {
                let n = opts.substeps.max(1);
                let h = (tb - ta) / n as f64;
                for s in 0..n {
                    y = rk4_step(&f, ta + s as f64 * h, &y, h)?;
                }
            }
            Method::Rk45 => {
                let mut t = ta;
                let mut rejections = 0usize;
                while t < tb {
                    let h = h_try.min(tb - t);
                    let (y_new, err) = dopri_step(&f, t, &y, h)?;
                    let scale = opts.tol * (1.0 + y.norm());
                    let ratio = err / scale;
                    if ratio <= 1.0 || h < 1e-14 * (1.0 + t.abs()) {
                        t = if tb - t <= h { tb } else { t + h };
                        y = y_new;
                        rejections = 0;
                    } else {
                        rejections += 1;
                        if rejections > 50 {
                            return Err(EngineError::Integration {
                                t,
                                reason: "step size underflow".into(),
                            });
                        }
                    }
                    let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                    h_try = (h * factor).max(1e-14);
                }
            }
        }
        if !y.is_finite() {
            return Err(EngineError::Integration {
                t: tb,
                reason: "non-finite state".into(),
            });
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(t: f64) -> DVector<f64> {
        DVector::from_vec(vec![t.cos(), t.sin()])
    }

    fn rhs(_t: f64, y: &DVector<f64>) -> Result<DVector<f64>, EngineError> {
        Ok(DVector::from_vec(vec![-y[1], y[0]]))
    }

    #[test]
    fn grid_points() {
        let g = TimeGrid::new(1.0, 2.0, 4).unwrap();
        assert_eq!(g.times(), vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        assert!(TimeGrid::new(1.0, 1.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |steps| {
            let g = TimeGrid::new(0.0, 5.0, steps).unwrap();
            let ys = integrate(rhs, rotation(0.0), &g, &SolverOptions::default()).unwrap();
            (ys.last().unwrap() - rotation(5.0)).norm()
        };
        let ratio = err(100) / err(200);
        assert!(ratio > 14.0 && ratio < 18.0, "{ratio}");
    }

    #[test]
    fn rk45_meets_tolerance() {
        let g = TimeGrid::new(0.0, 10.0, 7).unwrap();
        let ys = integrate(rhs, rotation(0.0), &g, &SolverOptions::rk45(1e-11)).unwrap();
        for (k, y) in ys.iter().enumerate() {
            assert!((y - rotation(g.time(k))).norm() < 1e-9);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let g = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let f = |_t: f64, y: &DVector<f64>| Ok(y.map(|v| v * v * 1e300));
        let r = integrate(f, DVector::from_vec(vec![1.0]), &g, &SolverOptions::default());
        assert!(matches!(r, Err(EngineError::Integration { .. })));
    }
}

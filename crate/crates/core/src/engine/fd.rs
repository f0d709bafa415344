//! Finite-difference derivatives on a uniform grid.

use super::OdeState;

/// Weights `(index, w)` such that `f'(t_k) ≈ Σ w f_index / h`. Fourth order
/// where five points are available, lower order on shorter grids.
pub fn derivative_weights(k: usize, n: usize) -> Vec<(usize, f64)> {
    assert!(n >= 2 && k < n);
    let w = |base: usize, ws: &[f64]| -> Vec<(usize, f64)> {
        ws.iter().enumerate().map(|(i, x)| (base + i, *x)).collect()
    };
    if n >= 5 {
        match k {
            0 => w(0, &[-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25]),
            1 => w(0, &[-0.25, -5.0 / 6.0, 1.5, -0.5, 1.0 / 12.0]),
            _ if k == n - 2 => w(n - 5, &[-1.0 / 12.0, 0.5, -1.5, 5.0 / 6.0, 0.25]),
            _ if k == n - 1 => w(n - 5, &[0.25, -4.0 / 3.0, 3.0, -4.0, 25.0 / 12.0]),
            _ => w(k - 2, &[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0]),
        }
    } else if n >= 3 {
        match k {
            0 => w(0, &[-1.5, 2.0, -0.5]),
            _ if k == n - 1 => w(n - 3, &[0.5, -2.0, 1.5]),
            _ => w(k - 1, &[-0.5, 0.0, 0.5]),
        }
    } else {
        w(0, &[-1.0, 1.0])
    }
}

/// Derivative of sampled values with spacing `h`.
pub fn differentiate<S: OdeState>(values: &[S], h: f64) -> Vec<S> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let mut acc = values[k].clone();
            acc.axpy(-1.0, &values[k]);
            for (i, w) in derivative_weights(k, n) {
                if w != 0.0 {
                    acc.axpy(w / h, &values[i]);
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn exact_for_quartics() {
        let h = 0.1;
        let f = |t: f64| 1.0 + t - 2.0 * t * t + 0.5 * t.powi(3) + 0.25 * t.powi(4);
        let df = |t: f64| 1.0 - 4.0 * t + 1.5 * t * t + t.powi(3);
        let vals: Vec<DVector<f64>> = (0..9).map(|k| DVector::from_vec(vec![f(k as f64 * h)])).collect();
        for (k, d) in differentiate(&vals, h).iter().enumerate() {
            assert!((d[0] - df(k as f64 * h)).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn short_grids() {
        let vals: Vec<DVector<f64>> = [0.0, 2.0].iter().map(|v| DVector::from_vec(vec![*v])).collect();
        assert_eq!(differentiate(&vals, 0.5)[1][0], 4.0);
        let vals: Vec<DVector<f64>> = [0.0, 1.0, 4.0].iter().map(|v| DVector::from_vec(vec![*v])).collect();
        let d = differentiate(&vals, 1.0);
        assert_eq!((d[0][0], d[1][0], d[2][0]), (0.0, 2.0, 4.0));
    }
}

//! Dense helpers for the small symmetric systems the solvers need.

use ndarray::{Array1, Array2};

/// Lower Cholesky factor of a symmetric positive-definite matrix, or `None`
/// if a pivot is not positive.
pub(crate) fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > 0.0) {
            return None;
        }
        let diag = diag.sqrt();
        l[[j, j]] = diag;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / diag;
        }
    }
    Some(l)
}

/// Solves `L·Lᵀ·x = b` given the lower factor `L`.
pub(crate) fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solves the symmetric system `a·x = b`, adding a growing ridge to the
/// diagonal until the factorization succeeds.
pub(crate) fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    if let Some(l) = cholesky(a) {
        return Some(cholesky_solve(&l, b));
    }
    let scale = (0..a.nrows()).map(|i| a[[i, i]].abs()).fold(0.0, f64::max).max(1e-300);
    let mut ridge = 1e-12 * scale;
    for _ in 0..12 {
        let mut shifted = a.clone();
        for i in 0..a.nrows() {
            shifted[[i, i]] += ridge;
        }
        if let Some(l) = cholesky(&shifted) {
            return Some(cholesky_solve(&l, b));
        }
        ridge *= 10.0;
    }
    None
}
